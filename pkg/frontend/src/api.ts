// Thin typed client for the label-store API. The fetch implementation is
// injectable so tests can run without a server.

import { ExpertsDoc, LabelDoc, SaveReply, SeriesDoc } from './types.js';

export class ApiError extends Error {
    constructor(
        message: string,
        public status: number,
        public offending: Array<[number, number]> = [],
    ) {
        super(message);
        this.name = 'ApiError';
    }
}

type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export class LabelApi {
    constructor(
        private baseUrl = '',
        private fetchFn: FetchFn = (input, init) => globalThis.fetch(input, init),
    ) {}

    async stocks(): Promise<string[]> {
        return this.get('/api/stocks');
    }

    async series(stockId: string, scale: 'raw' | 'log' = 'log'): Promise<SeriesDoc> {
        return this.get(`/api/series/${encodeURIComponent(stockId)}?scale=${scale}`);
    }

    async experts(stockId: string): Promise<string[]> {
        const doc: ExpertsDoc = await this.get(`/api/labels/${encodeURIComponent(stockId)}`);
        return doc.experts;
    }

    async labels(stockId: string, expertId: string): Promise<LabelDoc> {
        return this.get(
            `/api/labels/${encodeURIComponent(stockId)}?expert=${encodeURIComponent(expertId)}`,
        );
    }

    async save(doc: LabelDoc): Promise<SaveReply> {
        const resp = await this.fetchFn(
            `${this.baseUrl}/api/labels/${encodeURIComponent(doc.stock_id)}`,
            {
                method: 'POST',
                headers: { 'Content-Type': 'application/json' },
                body: JSON.stringify(doc),
            },
        );
        if (!resp.ok) throw await this.toError(resp);
        return resp.json();
    }

    private async get<T>(path: string): Promise<T> {
        const resp = await this.fetchFn(this.baseUrl + path);
        if (!resp.ok) throw await this.toError(resp);
        return resp.json();
    }

    // FastAPI errors carry {detail}; overlap rejections add offending ranges
    private async toError(resp: Response): Promise<ApiError> {
        let message = `${resp.status} ${resp.statusText}`;
        let offending: Array<[number, number]> = [];
        try {
            const body = await resp.json();
            const detail = body.detail ?? body;
            if (typeof detail === 'string') message = detail;
            else if (detail && typeof detail.error === 'string') {
                message = detail.error;
                if (Array.isArray(detail.offending)) offending = detail.offending;
            }
        } catch {
            // non-JSON error body: keep the status line
        }
        return new ApiError(message, resp.status, offending);
    }
}
