/**
 * ConsoleSession: the console's only client-side state.
 *
 * Actor name persists across reloads (browser localStorage); filters and
 * the selected KPI version are session-local. Losing all of it loses no
 * data, since the service holds everything authoritative.
 */

import type { EventFilter } from './api.js';

/** Narrow key-value contract so tests can substitute a plain Map. */
export interface KeyValueStore {
    getItem(key: string): string | null;
    setItem(key: string, value: string): void;
}

const ACTOR_KEY = 'fieldledger-actor';

export class ConsoleSession {
    filter: EventFilter = {};
    selectedKpiVersion: number | null = null;
    cursor: string | null = null;

    constructor(private readonly kv: KeyValueStore) {}

    get actor(): string {
        return this.kv.getItem(ACTOR_KEY) ?? '';
    }

    set actor(name: string) {
        this.kv.setItem(ACTOR_KEY, name.trim());
    }

    /** Flags need an actor; the UI nudges before the API would 4xx. */
    hasActor(): boolean {
        return this.actor.length > 0;
    }
}

export interface ConsoleConfig {
    api_base_url: string;
}

/** Load console_config.json served next to the static assets. */
export async function loadConfig(configUrl = './console_config.json'): Promise<ConsoleConfig> {
    try {
        const res = await fetch(configUrl);
        if (!res.ok) return { api_base_url: '' };
        const doc = (await res.json()) as Partial<ConsoleConfig>;
        return { api_base_url: doc.api_base_url ?? '' };
    } catch {
        // same-origin default keeps the console usable without config
        return { api_base_url: '' };
    }
}
