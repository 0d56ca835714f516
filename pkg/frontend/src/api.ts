import { AnswerBundle, HealthInfo, RetrievedItem, ServiceConfig } from './types.js';

export class ApiError extends Error {
    constructor(message: string, readonly retryable: boolean = true) {
        super(message);
        this.name = 'ApiError';
    }
}

type FetchLike = typeof fetch;

export class ApiClient {
    private readonly baseUrl: string;
    private readonly fetchImpl: FetchLike;

    constructor(baseUrl: string, fetchImpl: FetchLike = fetch) {
        this.baseUrl = baseUrl.replace(/\/$/, '');
        this.fetchImpl = fetchImpl;
    }

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        let response: Response;
        try {
            response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
        } catch (err) {
            throw new ApiError(`service unreachable: ${String(err)}`);
        }
        if (!response.ok) {
            throw new ApiError(`service returned ${response.status}`, response.status >= 500);
        }
        return (await response.json()) as T;
    }

    health(): Promise<HealthInfo> {
        return this.request<HealthInfo>('/health');
    }

    config(): Promise<ServiceConfig> {
        return this.request<ServiceConfig>('/config');
    }

    ask(query: string, products: string[] | null = null): Promise<AnswerBundle> {
        const body: { query: string; products?: string[] } = { query };
        if (products !== null && products.length > 0) {
            body.products = products;
        }
        return this.request<AnswerBundle>('/ask', {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify(body),
        });
    }

    async retrieve(query: string, k?: number): Promise<RetrievedItem[]> {
        const payload = await this.request<{ items: RetrievedItem[] }>('/retrieve', {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify(k === undefined ? { query } : { query, k }),
        });
        return payload.items;
    }
}
