/**
 * Pure HTML renderers.
 *
 * Every function maps API response data to markup with no recomputation
 * and no reordering, so a row-by-row comparison against the raw API
 * response is meaningful. main.ts owns all event wiring; nothing here
 * touches the DOM.
 */

import type { CommitRecord, Flag, QuarantineRecord, RunDoc, StoredEvent } from './api.js';
import { connectivityLabel, fmtEpochMs, fmtInstant, fmtValue, payloadPreview } from './format.js';
import type { KpiRow } from './kpi.js';

export function escapeHtml(text: string): string {
    return text
        .replace(/&/g, '&amp;')
        .replace(/</g, '&lt;')
        .replace(/>/g, '&gt;')
        .replace(/"/g, '&quot;');
}

export function renderError(message: string): string {
    return `<div class="error-box">${escapeHtml(message)}</div>`;
}

export function renderEmpty(message: string): string {
    return `<div class="empty-box">${escapeHtml(message)}</div>`;
}

// -- events ----------------------------------------------------------------

export function renderFlagBadge(flag: Flag | undefined): string {
    if (!flag) return '';
    return `<span class="flag-badge flag-${escapeHtml(flag.verdict)}" title="${escapeHtml(flag.actor)}: ${escapeHtml(flag.note)}">${escapeHtml(flag.verdict)}</span>`;
}

/**
 * Event rows in the exact order the API returned them. `flags` maps
 * event_id to its active flag (first actor wins for display; the full
 * list is visible through the flags tab).
 */
export function renderEventsTable(events: StoredEvent[], flags: Map<string, Flag>): string {
    if (events.length === 0) return renderEmpty('no events');
    const rows = events
        .map((e) => {
            const conn = connectivityLabel(e.connectivity);
            const connClass = e.connectivity.online ? 'conn-online' : 'conn-offline';
            return (
                `<tr data-event-id="${escapeHtml(e.event_id)}">` +
                `<td class="c-event-id mono">${escapeHtml(e.event_id)}</td>` +
                `<td class="c-user">${escapeHtml(e.user_id)}</td>` +
                `<td class="c-kind">${escapeHtml(e.kind)}</td>` +
                `<td class="c-adjusted mono" data-ts="${e.adjusted_ts}">${escapeHtml(fmtEpochMs(e.adjusted_ts))}</td>` +
                `<td class="c-conn"><span class="conn-badge ${connClass}">${escapeHtml(conn)}</span></td>` +
                `<td class="c-payload mono">${escapeHtml(payloadPreview(e.payload))}</td>` +
                `<td class="c-flag">${renderFlagBadge(flags.get(e.event_id))}</td>` +
                `<td class="c-actions">` +
                `<button class="flag-btn" data-verdict="invalid" data-event-id="${escapeHtml(e.event_id)}">invalid</button>` +
                `<button class="flag-btn" data-verdict="suspicious" data-event-id="${escapeHtml(e.event_id)}">suspicious</button>` +
                `<button class="flag-btn" data-verdict="cleared" data-event-id="${escapeHtml(e.event_id)}">clear</button>` +
                `</td></tr>`
            );
        })
        .join('');
    return (
        '<table class="data-table events-table"><thead><tr>' +
        '<th>event id</th><th>user</th><th>kind</th><th>adjusted ts</th>' +
        '<th>connectivity</th><th>payload</th><th>flag</th><th></th>' +
        `</tr></thead><tbody>${rows}</tbody></table>`
    );
}

export function renderPager(nextCursor: string | null, shown: number): string {
    const next = nextCursor
        ? `<button id="next-page" data-cursor="${escapeHtml(nextCursor)}">next page</button>`
        : '';
    return `<div class="pager"><span>${shown} event${shown === 1 ? '' : 's'} shown</span>${next}</div>`;
}

// -- quarantine --------------------------------------------------------------

export function renderQuarantineTable(records: QuarantineRecord[]): string {
    if (records.length === 0) return renderEmpty('quarantine is empty');
    const rows = records
        .map((r) => {
            const errors = r.outcome.errors
                .map((e) => `<span class="err-code" title="${escapeHtml(e.path)}: ${escapeHtml(e.message)}">${escapeHtml(e.code)}</span>`)
                .join(' ');
            return (
                '<tr>' +
                `<td class="c-event-id mono">${escapeHtml(r.event_id ?? '(missing)')}</td>` +
                `<td class="c-received mono">${escapeHtml(fmtInstant(r.received_at))}</td>` +
                `<td class="c-errors">${errors}</td>` +
                `<td class="c-raw mono">${escapeHtml(payloadPreview(r.raw as Record<string, unknown>, 80))}</td>` +
                '</tr>'
            );
        })
        .join('');
    return (
        '<table class="data-table"><thead><tr>' +
        '<th>event id</th><th>received</th><th>errors</th><th>raw</th>' +
        `</tr></thead><tbody>${rows}</tbody></table>`
    );
}

// -- kpis ----------------------------------------------------------------------

/** Version picker over the kpis table history, newest first. */
export function renderVersionPicker(versions: CommitRecord[], selected: number): string {
    const options = [...versions]
        .sort((a, b) => b.version - a.version)
        .map((v) => {
            const sel = v.version === selected ? ' selected' : '';
            const runId = typeof v.op_meta['run_id'] === 'string' ? ` (run ${String(v.op_meta['run_id']).slice(0, 8)})` : '';
            return `<option value="${v.version}"${sel}>v${v.version}${escapeHtml(runId)}</option>`;
        })
        .join('');
    return `<label class="picker">version <select id="kpi-version">${options}</select></label>`;
}

export function renderKpiTable(rows: KpiRow[]): string {
    if (rows.length === 0) return renderEmpty('no KPI rows');
    const body = rows
        .map(
            (r) =>
                `<tr><td class="c-date mono">${escapeHtml(r.date)}</td>` +
                `<td class="c-kpi">${escapeHtml(r.kpi)}</td>` +
                `<td class="c-value mono">${escapeHtml(fmtValue(r.value))}</td></tr>`,
        )
        .join('');
    return (
        '<table class="data-table kpi-table"><thead><tr>' +
        '<th>date</th><th>kpi</th><th>value</th>' +
        `</tr></thead><tbody>${body}</tbody></table>`
    );
}

// -- runs -------------------------------------------------------------------

export function renderRunsTable(runs: RunDoc[]): string {
    if (runs.length === 0) return renderEmpty('no pipeline runs yet');
    const rows = [...runs]
        .sort((a, b) => (a.started < b.started ? 1 : -1))
        .map((r) => {
            const outputs = r.params['outputs'] ?? '';
            return (
                `<tr><td class="c-run-id mono">${escapeHtml(r.run_id)}</td>` +
                `<td class="c-status run-${escapeHtml(r.status)}">${escapeHtml(r.status)}</td>` +
                `<td class="c-started mono">${escapeHtml(fmtInstant(r.started))}</td>` +
                `<td class="c-outputs mono">${escapeHtml(outputs)}</td></tr>`
            );
        })
        .join('');
    return (
        '<table class="data-table"><thead><tr>' +
        '<th>run</th><th>status</th><th>started</th><th>output versions</th>' +
        `</tr></thead><tbody>${rows}</tbody></table>`
    );
}
