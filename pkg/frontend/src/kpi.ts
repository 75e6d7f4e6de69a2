/**
 * Shaping of KPI rows for the chart view.
 *
 * Rows arrive from `/v1/tables/kpis/rows` as {date, kpi, value}. The
 * endpoint returns the append-only accumulation up to the selected
 * version, so a later pipeline run's rows follow the earlier ones and
 * supersede them per (kpi, date). This module reduces, groups and
 * sorts; it never derives new values.
 */

export interface KpiRow {
    date: string;
    kpi: string;
    value: number;
}

export interface KpiSeries {
    kpi: string;
    points: { date: string; value: number }[];
}

function asMap(rows: KpiRow[]): Map<string, Map<string, number>> {
    // kpi -> date -> value; last row wins, so newer runs override older ones
    const byKpi = new Map<string, Map<string, number>>();
    for (const row of rows) {
        let dates = byKpi.get(row.kpi);
        if (!dates) {
            dates = new Map();
            byKpi.set(row.kpi, dates);
        }
        dates.set(row.date, row.value);
    }
    return byKpi;
}

/**
 * Collapse accumulated rows to one row per (kpi, date), the value being
 * the latest run's. Output is sorted by kpi then date.
 */
export function effectiveRows(rows: KpiRow[]): KpiRow[] {
    const out: KpiRow[] = [];
    for (const series of toSeries(rows)) {
        for (const p of series.points) {
            out.push({ date: p.date, kpi: series.kpi, value: p.value });
        }
    }
    return out;
}

/** Group rows into per-KPI series, KPIs and dates both sorted. */
export function toSeries(rows: KpiRow[]): KpiSeries[] {
    const byKpi = asMap(rows);
    return [...byKpi.keys()].sort().map((kpi) => ({
        kpi,
        points: [...byKpi.get(kpi)!.entries()]
            .sort(([a], [b]) => (a < b ? -1 : a > b ? 1 : 0))
            .map(([date, value]) => ({ date, value })),
    }));
}

/** Sorted union of dates present in the rows. */
export function allDates(rows: KpiRow[]): string[] {
    return [...new Set(rows.map((r) => r.date))].sort();
}

/** Sorted KPI names present in the rows. */
export function kpiNames(rows: KpiRow[]): string[] {
    return [...new Set(rows.map((r) => r.kpi))].sort();
}

/**
 * Dates on which two KPI rowsets disagree (value changed, or a date's
 * rows exist on one side only). Used to show what a curation verdict
 * actually moved between two pipeline versions.
 */
export function datesWhereDiffer(a: KpiRow[], b: KpiRow[]): string[] {
    const left = asMap(a);
    const right = asMap(b);
    const kpis = new Set([...left.keys(), ...right.keys()]);
    const differing = new Set<string>();
    for (const kpi of kpis) {
        const lDates = left.get(kpi) ?? new Map<string, number>();
        const rDates = right.get(kpi) ?? new Map<string, number>();
        for (const date of new Set([...lDates.keys(), ...rDates.keys()])) {
            if (lDates.get(date) !== rDates.get(date)) differing.add(date);
        }
    }
    return [...differing].sort();
}
