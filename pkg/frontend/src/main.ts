/**
 * Browser bootstrap: wires the pure renderers to the DOM and the API.
 *
 * The decision loop lives here: query events, inspect quarantine, submit
 * verdicts, rerun the pipeline from the CLI, then watch the KPI chart
 * move. Rendering stays in views.ts/chart.ts so it can be tested headless.
 */

import { ApiClient, ApiError, type EventFilter, type EventsPage, type Flag } from './api.js';
import { svgLineChart } from './chart.js';
import { effectiveRows, toSeries, type KpiRow } from './kpi.js';
import { ConsoleSession, loadConfig } from './state.js';
import {
    renderEmpty,
    renderError,
    renderEventsTable,
    renderKpiTable,
    renderPager,
    renderQuarantineTable,
    renderRunsTable,
    renderVersionPicker,
} from './views.js';

type Tab = 'events' | 'quarantine' | 'kpis' | 'runs';

class ConsoleApp {
    private tab: Tab = 'events';
    private events: EventsPage | null = null;

    constructor(
        private readonly api: ApiClient,
        private readonly session: ConsoleSession,
        private readonly root: HTMLElement,
    ) {}

    async start(): Promise<void> {
        this.root.innerHTML = `
            <header class="topbar">
                <h1>fieldledger console</h1>
                <label class="actor-field">actor
                    <input id="actor" type="text" placeholder="your name" value="${this.session.actor.replace(/"/g, '&quot;')}">
                </label>
            </header>
            <nav class="tabs">
                <button class="tab-btn active" data-tab="events">events</button>
                <button class="tab-btn" data-tab="quarantine">quarantine</button>
                <button class="tab-btn" data-tab="kpis">kpis</button>
                <button class="tab-btn" data-tab="runs">runs</button>
            </nav>
            <section id="filter-bar" class="filter-bar">
                <input id="f-user" placeholder="user_id">
                <input id="f-kind" placeholder="kind">
                <select id="f-online">
                    <option value="">any connectivity</option>
                    <option value="true">online only</option>
                    <option value="false">offline only</option>
                </select>
                <input id="f-from" placeholder="from (ISO or epoch-ms)">
                <input id="f-to" placeholder="to (ISO or epoch-ms)">
                <button id="apply-filter">apply</button>
            </section>
            <main id="content"></main>
        `;

        const actorInput = this.root.querySelector('#actor') as HTMLInputElement;
        actorInput.addEventListener('change', () => {
            this.session.actor = actorInput.value;
        });

        this.root.querySelectorAll<HTMLButtonElement>('.tab-btn').forEach((btn) => {
            btn.addEventListener('click', () => {
                this.root.querySelectorAll('.tab-btn').forEach((b) => b.classList.remove('active'));
                btn.classList.add('active');
                this.tab = btn.dataset['tab'] as Tab;
                void this.refresh();
            });
        });

        (this.root.querySelector('#apply-filter') as HTMLButtonElement).addEventListener('click', () => {
            this.session.filter = this.readFilter();
            this.session.cursor = null;
            void this.refresh();
        });

        await this.refresh();
    }

    private readFilter(): EventFilter {
        const val = (id: string) => (this.root.querySelector(id) as HTMLInputElement).value.trim();
        const filter: EventFilter = {};
        if (val('#f-user')) filter.user_id = val('#f-user');
        if (val('#f-kind')) filter.kind = val('#f-kind');
        if (val('#f-from')) filter.from = val('#f-from');
        if (val('#f-to')) filter.to = val('#f-to');
        const online = (this.root.querySelector('#f-online') as HTMLSelectElement).value;
        if (online) filter.online = online === 'true';
        return filter;
    }

    private content(): HTMLElement {
        return this.root.querySelector('#content') as HTMLElement;
    }

    private async refresh(): Promise<void> {
        const filterBar = this.root.querySelector('#filter-bar') as HTMLElement;
        filterBar.style.display = this.tab === 'events' ? '' : 'none';
        try {
            switch (this.tab) {
                case 'events':
                    await this.showEvents();
                    break;
                case 'quarantine':
                    await this.showQuarantine();
                    break;
                case 'kpis':
                    await this.showKpis();
                    break;
                case 'runs':
                    await this.showRuns();
                    break;
            }
        } catch (e) {
            this.content().innerHTML = renderError(
                e instanceof ApiError ? `${e.code}: ${e.message}` : String(e),
            );
        }
    }

    // -- events tab ----------------------------------------------------------

    private async showEvents(append = false): Promise<void> {
        const page = await this.api.queryEvents(this.session.filter, {
            limit: 200,
            ...(this.session.cursor ? { cursor: this.session.cursor } : {}),
        });
        if (append && this.events) {
            this.events = {
                events: [...this.events.events, ...page.events],
                next_cursor: page.next_cursor,
                version: page.version,
            };
        } else {
            this.events = page;
        }
        const { flags } = await this.api.activeFlags();
        const byId = new Map<string, Flag>();
        // reverse so the first actor's flag (sorted order) wins for the badge
        for (const f of [...flags].reverse()) byId.set(f.event_id, f);

        this.content().innerHTML =
            renderEventsTable(this.events.events, byId) +
            renderPager(this.events.next_cursor, this.events.events.length);

        this.content().querySelectorAll<HTMLButtonElement>('.flag-btn').forEach((btn) => {
            btn.addEventListener('click', () => void this.flag(btn));
        });
        const next = this.content().querySelector('#next-page') as HTMLButtonElement | null;
        if (next) {
            next.addEventListener('click', () => {
                this.session.cursor = next.dataset['cursor'] ?? null;
                void this.showEvents(true);
            });
        }
    }

    private async flag(btn: HTMLButtonElement): Promise<void> {
        if (!this.session.hasActor()) {
            window.alert('set an actor name first (top right)');
            return;
        }
        const verdict = btn.dataset['verdict']!;
        const eventId = btn.dataset['eventId']!;
        const note = verdict === 'cleared' ? '' : window.prompt(`note for ${verdict} flag`, '') ?? '';
        try {
            await this.api.submitFlag({
                event_id: eventId,
                verdict,
                note,
                actor: this.session.actor,
            });
            await this.showEvents();
        } catch (e) {
            // failure leaves local state untouched; the row keeps its old badge
            window.alert(e instanceof ApiError ? `${e.code}: ${e.message}` : String(e));
        }
    }

    // -- quarantine tab --------------------------------------------------------

    private async showQuarantine(): Promise<void> {
        const page = await this.api.listQuarantine({ limit: 200 });
        this.content().innerHTML = renderQuarantineTable(page.records);
    }

    // -- kpi tab ------------------------------------------------------------------

    private async showKpis(): Promise<void> {
        let versions;
        try {
            versions = (await this.api.tableVersions('kpis')).versions;
        } catch (e) {
            if (e instanceof ApiError && e.status === 404) {
                this.content().innerHTML = renderEmpty(
                    'no pipeline runs yet: run `fieldledger-pipeline run` and refresh',
                );
                return;
            }
            throw e;
        }
        const latest = Math.max(...versions.map((v) => v.version));
        const selected = this.session.selectedKpiVersion ?? latest;
        const { rows } = await this.api.tableRows('kpis', selected);
        // rows accumulate across runs; collapse to the selected version's view
        const kpiRows = effectiveRows(rows as unknown as KpiRow[]);

        this.content().innerHTML =
            `<div class="kpi-head">${renderVersionPicker(versions, selected)}</div>` +
            svgLineChart(toSeries(kpiRows)) +
            renderKpiTable(kpiRows);

        const picker = this.content().querySelector('#kpi-version') as HTMLSelectElement;
        picker.addEventListener('change', () => {
            this.session.selectedKpiVersion = Number(picker.value);
            void this.showKpis();
        });
    }

    // -- runs tab -----------------------------------------------------------------

    private async showRuns(): Promise<void> {
        const { runs } = await this.api.listRuns();
        this.content().innerHTML = renderRunsTable(runs);
    }
}

async function boot(): Promise<void> {
    const config = await loadConfig();
    const api = new ApiClient(config.api_base_url);
    const session = new ConsoleSession(window.localStorage);
    const root = document.getElementById('app');
    if (!root) throw new Error('#app container missing');
    await new ConsoleApp(api, session, root).start();
}

void boot();
