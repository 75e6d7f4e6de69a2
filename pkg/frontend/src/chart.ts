/**
 * Dependency-free SVG line chart for KPI series.
 *
 * Pure string in, string out, so the renderer is testable without a
 * browser. Each point carries its exact API value in a <title> element;
 * scaling only positions points, it never changes displayed numbers.
 */

import { fmtValue } from './format.js';
import type { KpiSeries } from './kpi.js';

const PALETTE = ['#2563eb', '#dc2626', '#059669', '#d97706', '#7c3aed', '#0891b2', '#be185d'];

export interface ChartOptions {
    width?: number;
    height?: number;
}

function escapeXml(text: string): string {
    return text
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;');
}

/** Render series (sharing an x axis of sorted dates) to an SVG string. */
export function svgLineChart(series: KpiSeries[], opts: ChartOptions = {}): string {
    const width = opts.width ?? 720;
    const height = opts.height ?? 280;
    const pad = { left: 56, right: 16, top: 12, bottom: 34 };

    const dates = [...new Set(series.flatMap((s) => s.points.map((p) => p.date)))].sort();
    if (dates.length === 0) {
        return `<svg class="kpi-chart" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg"><text x="${width / 2}" y="${height / 2}" text-anchor="middle" class="chart-empty">no data</text></svg>`;
    }

    const values = series.flatMap((s) => s.points.map((p) => p.value));
    const vMax = Math.max(...values, 0);
    const vMin = Math.min(...values, 0);
    const span = vMax - vMin || 1;

    const plotW = width - pad.left - pad.right;
    const plotH = height - pad.top - pad.bottom;
    const x = (date: string) =>
        dates.length === 1
            ? pad.left + plotW / 2
            : pad.left + (dates.indexOf(date) / (dates.length - 1)) * plotW;
    const y = (v: number) => pad.top + (1 - (v - vMin) / span) * plotH;

    const parts: string[] = [];
    parts.push(
        `<svg class="kpi-chart" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg">`,
    );
    // axes
    parts.push(
        `<line class="axis" x1="${pad.left}" y1="${pad.top}" x2="${pad.left}" y2="${height - pad.bottom}"/>`,
        `<line class="axis" x1="${pad.left}" y1="${height - pad.bottom}" x2="${width - pad.right}" y2="${height - pad.bottom}"/>`,
        `<text class="tick" x="${pad.left - 6}" y="${y(vMax) + 4}" text-anchor="end">${fmtValue(vMax)}</text>`,
        `<text class="tick" x="${pad.left - 6}" y="${y(vMin) + 4}" text-anchor="end">${fmtValue(vMin)}</text>`,
        `<text class="tick" x="${pad.left}" y="${height - 10}" text-anchor="start">${escapeXml(dates[0]!)}</text>`,
    );
    if (dates.length > 1) {
        parts.push(
            `<text class="tick" x="${width - pad.right}" y="${height - 10}" text-anchor="end">${escapeXml(dates[dates.length - 1]!)}</text>`,
        );
    }

    series.forEach((s, i) => {
        const color = PALETTE[i % PALETTE.length];
        const pts = s.points.map((p) => `${x(p.date).toFixed(1)},${y(p.value).toFixed(1)}`);
        if (pts.length > 1) {
            parts.push(
                `<polyline class="series" data-kpi="${escapeXml(s.kpi)}" fill="none" stroke="${color}" stroke-width="1.5" points="${pts.join(' ')}"/>`,
            );
        }
        for (const p of s.points) {
            parts.push(
                `<circle class="pt" data-kpi="${escapeXml(s.kpi)}" data-date="${escapeXml(p.date)}" cx="${x(p.date).toFixed(1)}" cy="${y(p.value).toFixed(1)}" r="2.5" fill="${color}">` +
                    `<title>${escapeXml(s.kpi)} ${escapeXml(p.date)}: ${fmtValue(p.value)}</title></circle>`,
            );
        }
    });

    // legend
    series.forEach((s, i) => {
        const color = PALETTE[i % PALETTE.length];
        const lx = pad.left + 8 + i * 150;
        parts.push(
            `<rect x="${lx}" y="${pad.top}" width="10" height="10" fill="${color}"/>`,
            `<text class="legend" x="${lx + 14}" y="${pad.top + 9}">${escapeXml(s.kpi)}</text>`,
        );
    });

    parts.push('</svg>');
    return parts.join('');
}
