/**
 * Test scaffolding: spawn a real server, seed it over HTTP, and drive
 * the pipeline CLI, exactly the way an operator session would.
 */

import { spawn, spawnSync, type ChildProcess } from 'node:child_process';
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

const CROCKFORD = '0123456789ABCDEFGHJKMNPQRSTVWXYZ';

function encodeBase32(value: bigint, chars: number): string {
    let out = '';
    for (let i = 0; i < chars; i++) {
        out = CROCKFORD[Number(value & 31n)] + out;
        value >>= 5n;
    }
    return out;
}

/** Deterministic id in canonical 26-char form: 48-bit time + sequence. */
export function makeUlid(timeMs: number, seq: number): string {
    return encodeBase32(BigInt(timeMs), 10) + encodeBase32(BigInt(seq), 16);
}

export function makeDataDir(): string {
    return mkdtempSync(join(tmpdir(), 'fl-console-'));
}

export interface LiveServer {
    proc: ChildProcess;
    url: string;
}

export async function startServer(dataDir: string, consoleDir?: string): Promise<LiveServer> {
    const args = ['-m', 'fieldledger.service.cli', '--data-dir', dataDir, '--port', '0'];
    if (consoleDir) args.push('--console-dir', consoleDir);
    const proc = spawn('python3', args, { stdio: ['ignore', 'pipe', 'pipe'] });
    const url = await new Promise<string>((resolve, reject) => {
        let buf = '';
        const scan = (chunk: Buffer) => {
            buf += chunk.toString();
            const m = buf.match(/listening on (http:\/\/[\d.]+:\d+)/);
            if (m) resolve(m[1]!);
        };
        proc.stdout!.on('data', scan);
        proc.stderr!.on('data', scan);
        proc.on('exit', (code) => reject(new Error(`server exited early (${code}): ${buf}`)));
        setTimeout(() => reject(new Error(`server start timed out: ${buf}`)), 30_000);
    });
    return { proc, url };
}

export async function stopServer(server: LiveServer): Promise<void> {
    const done = new Promise<void>((resolve) => server.proc.once('exit', () => resolve()));
    server.proc.kill('SIGINT');
    await done;
}

export interface PipelineResult {
    run_id: string;
    input: { events: number; curation_flags: number };
    outputs: Record<string, number | null>;
}

export function runPipelineCli(dataDir: string): PipelineResult {
    // --data-dir belongs to the top-level parser, so it precedes the verb
    const res = spawnSync(
        'python3',
        ['-m', 'fieldledger.pipelines.cli', '--data-dir', dataDir, 'run'],
        { encoding: 'utf8' },
    );
    if (res.status !== 0) {
        throw new Error(`pipeline run failed (${res.status}):\n${res.stderr}`);
    }
    return JSON.parse(res.stdout) as PipelineResult;
}

// -- seed corpus -------------------------------------------------------------

export interface SeedEnvelope {
    event_id: string;
    user_id: string;
    kind: string;
    client_ts: string;
    connectivity: { online: boolean; network_type: string; speed_kbps?: number };
    sdk_version: string;
    schema_version: number;
    payload: Record<string, unknown>;
}

const WIFI = { online: true, network_type: 'wifi', speed_kbps: 1200 };
const CELL = { online: true, network_type: 'cellular', speed_kbps: 300 };
const OFFLINE = { online: false, network_type: 'offline' };

/**
 * Twelve events over 2022-03-01..04: per day u1 logs a page view and a
 * purchase, u2 a page view while offline, u3 a content view. Mid-day
 * client times keep the (tiny) server skew from moving calendar dates.
 */
export function seedCorpus(): SeedEnvelope[] {
    const events: SeedEnvelope[] = [];
    let seq = 1;
    const envelope = (
        day: number,
        hour: number,
        user: string,
        kind: string,
        conn: typeof WIFI | typeof OFFLINE,
        payload: Record<string, unknown>,
    ): SeedEnvelope => {
        const clientTs = `2022-03-0${day}T${String(hour).padStart(2, '0')}:00:00.000Z`;
        return {
            event_id: makeUlid(Date.parse(clientTs), seq++),
            user_id: user,
            kind,
            client_ts: clientTs,
            connectivity: conn,
            sdk_version: '1.0.0',
            schema_version: 1,
            payload,
        };
    };
    for (let day = 1; day <= 4; day++) {
        events.push(envelope(day, 9, 'u1', 'page_view', WIFI, { page_id: 'home' }));
        events.push(envelope(day, 10, 'u1', 'purchase', WIFI, { amount: 5 + day, currency: 'USD' }));
        events.push(envelope(day, 11, 'u2', 'page_view', OFFLINE, { page_id: 'feed' }));
        events.push(envelope(day, 12, 'u3', 'content_view', CELL, { content_id: 'c01' }));
    }
    return events;
}

export interface BatchResult {
    batch_id: string;
    skew_ms: number;
    results: { event_id: string | null; status: string; errors: unknown[] }[];
}

export async function postBatch(url: string, events: unknown[]): Promise<BatchResult> {
    const body = {
        batch_id: makeUlid(Date.now(), 999_000 + Math.floor(Math.random() * 999)),
        app_id: 'console-test',
        device_id: 'dev-console',
        sent_ts: new Date().toISOString(),
        events,
    };
    const res = await fetch(`${url}/v1/events:batch`, {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(body),
    });
    if (!res.ok) throw new Error(`ingest failed: ${res.status} ${await res.text()}`);
    return (await res.json()) as BatchResult;
}
