/**
 * Display formatting helpers.
 *
 * These only reshape values for reading; numbers and identifiers are
 * rendered exactly as the API returned them (read-path fidelity).
 */

import type { ConnectivityInfo } from './api.js';

/** `2022-03-01T09:30:15.250Z` -> `2022-03-01 09:30:15Z` (display only). */
export function fmtInstant(instant: string): string {
    const m = instant.match(/^(\d{4}-\d{2}-\d{2})T(\d{2}:\d{2}:\d{2})/);
    if (!m) return instant;
    return `${m[1]} ${m[2]}Z`;
}

/** Epoch-ms field (e.g. adjusted_ts) shown as a UTC instant. */
export function fmtEpochMs(ms: number): string {
    return fmtInstant(new Date(ms).toISOString());
}

/** Exact decimal text of an API number; never rounded or localized. */
export function fmtValue(value: unknown): string {
    if (value === null) return 'null';
    if (typeof value === 'object') return JSON.stringify(value);
    return String(value);
}

/** Connectivity badge label, e.g. `online wifi 1200 kbps` or `offline`. */
export function connectivityLabel(conn: ConnectivityInfo): string {
    if (!conn.online) return 'offline';
    const speed = conn.speed_kbps !== undefined ? ` ${fmtValue(conn.speed_kbps)} kbps` : '';
    return `online ${conn.network_type}${speed}`;
}

/** Compact payload preview for table cells. */
export function payloadPreview(payload: Record<string, unknown>, maxLen = 60): string {
    const text = JSON.stringify(payload);
    return text.length <= maxLen ? text : text.slice(0, maxLen - 1) + '…';
}
