import { describe, expect, it } from 'vitest';
import { connectivityLabel, fmtInstant, fmtValue, payloadPreview } from '../src/format';

describe('fmtInstant', () => {
    it('trims to seconds for display', () => {
        expect(fmtInstant('2022-03-01T09:30:15.250Z')).toBe('2022-03-01 09:30:15Z');
        expect(fmtInstant('2022-03-01T09:30:15Z')).toBe('2022-03-01 09:30:15Z');
    });

    it('passes through values it cannot parse', () => {
        expect(fmtInstant('not-a-time')).toBe('not-a-time');
    });
});

describe('fmtValue', () => {
    it('renders numbers exactly as JSON would', () => {
        expect(fmtValue(3)).toBe('3');
        expect(fmtValue(2.5)).toBe('2.5');
        expect(fmtValue(1 / 3)).toBe('0.3333333333333333');
        expect(fmtValue(0.1 + 0.2)).toBe('0.30000000000000004');
    });

    it('handles null and objects', () => {
        expect(fmtValue(null)).toBe('null');
        expect(fmtValue({ a: 1 })).toBe('{"a":1}');
    });
});

describe('connectivityLabel', () => {
    it('labels online connections with type and speed', () => {
        expect(
            connectivityLabel({ online: true, network_type: 'wifi', speed_kbps: 1200.5 }),
        ).toBe('online wifi 1200.5 kbps');
    });

    it('omits speed when absent', () => {
        expect(connectivityLabel({ online: true, network_type: 'cellular' })).toBe(
            'online cellular',
        );
    });

    it('labels offline tersely', () => {
        expect(connectivityLabel({ online: false, network_type: 'offline' })).toBe('offline');
    });
});

describe('payloadPreview', () => {
    it('keeps short payloads verbatim', () => {
        expect(payloadPreview({ page_id: 'home' })).toBe('{"page_id":"home"}');
    });

    it('truncates with an ellipsis at the limit', () => {
        const long = payloadPreview({ q: 'x'.repeat(100) }, 20);
        expect(long.length).toBe(20);
        expect(long.endsWith('…')).toBe(true);
    });
});
