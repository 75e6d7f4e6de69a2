/**
 * Typed client for the fieldledger ingestion service HTTP API.
 *
 * The console holds no authoritative state: everything it shows comes
 * through this client, and it never recomputes what the server already
 * computed. That makes this file double as conformance documentation
 * for the API surface the console depends on.
 */

export interface ConnectivityInfo {
    online: boolean;
    network_type: string;
    speed_kbps?: number;
}

export interface StoredEvent {
    event_id: string;
    user_id: string;
    kind: string;
    client_ts: string;
    /** Skew-corrected time as epoch milliseconds; client_ts stays ISO. */
    adjusted_ts: number;
    connectivity: ConnectivityInfo;
    sdk_version: string;
    schema_version: number;
    payload: Record<string, unknown>;
    app_id: string;
    device_id: string;
    location?: { lat: number; lon: number };
}

export interface EventsPage {
    events: StoredEvent[];
    next_cursor: string | null;
    version: number;
}

export interface QuarantineRecord {
    event_id: string | null;
    received_at: string;
    raw: unknown;
    outcome: { status: string; errors: { code: string; path: string; message: string }[] };
    batch_id: string;
}

export interface QuarantinePage {
    records: QuarantineRecord[];
    next_cursor: string | null;
    version: number;
}

export interface Flag {
    event_id: string;
    verdict: 'invalid' | 'suspicious' | 'cleared';
    note: string;
    actor: string;
    flagged_at: string;
}

export interface CommitRecord {
    version: number;
    parent: number;
    files: { name: string; row_count: number; sha256: string }[];
    committed_at: number;
    op_meta: Record<string, unknown>;
}

export interface TableRows {
    table: string;
    version: number;
    rows: Record<string, unknown>[];
}

export interface RunDoc {
    run_id: string;
    name: string;
    status: string;
    params: Record<string, string>;
    logged_metrics: { key: string; value: number; step: number; logged_at: string }[];
    snapshot_refs: { table: string; version: number; rowset_digest: string }[];
    started: string;
    ended: string | null;
}

export interface EventFilter {
    user_id?: string;
    kind?: string;
    from?: string;
    to?: string;
    online?: boolean;
}

/** Error documents ({error, message}) surfaced with their HTTP status. */
export class ApiError extends Error {
    constructor(
        public readonly code: string,
        message: string,
        public readonly status: number,
    ) {
        super(message);
        this.name = 'ApiError';
    }
}

export class ApiClient {
    constructor(private readonly baseUrl: string = '') {}

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        let res: Response;
        try {
            res = await fetch(this.baseUrl + path, {
                method,
                headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
                body: body === undefined ? undefined : JSON.stringify(body),
            });
        } catch (e) {
            throw new ApiError('Unreachable', `service unreachable: ${(e as Error).message}`, 0);
        }
        let doc: unknown;
        try {
            doc = await res.json();
        } catch {
            throw new ApiError('BadResponse', `non-JSON response (status ${res.status})`, res.status);
        }
        if (!res.ok) {
            const err = doc as { error?: string; message?: string };
            throw new ApiError(err.error ?? 'Unknown', err.message ?? res.statusText, res.status);
        }
        return doc as T;
    }

    private get<T>(path: string, params?: Record<string, string>): Promise<T> {
        const qs = params && Object.keys(params).length > 0
            ? '?' + new URLSearchParams(params).toString()
            : '';
        return this.request<T>('GET', path + qs);
    }

    health(): Promise<{ ok: boolean; tables: string[] }> {
        return this.get('/healthz');
    }

    queryEvents(
        filter: EventFilter = {},
        opts: { limit?: number; cursor?: string } = {},
    ): Promise<EventsPage> {
        const params: Record<string, string> = {};
        if (filter.user_id !== undefined) params['user_id'] = filter.user_id;
        if (filter.kind !== undefined) params['kind'] = filter.kind;
        if (filter.from !== undefined) params['from'] = filter.from;
        if (filter.to !== undefined) params['to'] = filter.to;
        if (filter.online !== undefined) params['online'] = String(filter.online);
        if (opts.limit !== undefined) params['limit'] = String(opts.limit);
        if (opts.cursor !== undefined) params['cursor'] = opts.cursor;
        return this.get('/v1/events', params);
    }

    listQuarantine(opts: { limit?: number; cursor?: string } = {}): Promise<QuarantinePage> {
        const params: Record<string, string> = {};
        if (opts.limit !== undefined) params['limit'] = String(opts.limit);
        if (opts.cursor !== undefined) params['cursor'] = opts.cursor;
        return this.get('/v1/quarantine', params);
    }

    activeFlags(eventId?: string): Promise<{ flags: Flag[] }> {
        return this.get('/v1/curation/flags', eventId === undefined ? {} : { event_id: eventId });
    }

    submitFlag(flag: { event_id: string; verdict: string; note: string; actor: string }): Promise<Flag> {
        return this.request('POST', '/v1/curation/flags', flag);
    }

    tableVersions(name: string): Promise<{ table: string; versions: CommitRecord[] }> {
        return this.get(`/v1/tables/${name}/versions`);
    }

    tableRows(name: string, version?: number): Promise<TableRows> {
        return this.get(
            `/v1/tables/${name}/rows`,
            version === undefined ? {} : { version: String(version) },
        );
    }

    listRuns(): Promise<{ runs: RunDoc[] }> {
        return this.get('/v1/runs');
    }

    getRun(runId: string): Promise<RunDoc> {
        return this.get(`/v1/runs/${runId}`);
    }
}
