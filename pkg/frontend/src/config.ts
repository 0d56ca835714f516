// Service base URL resolution: runtime window global, then ?service= query
// parameter, then the build-time default (same origin when empty).

export const DEFAULT_BASE_URL = '';

declare global {
    interface Window {
        RAGFORGE_BASE_URL?: string;
    }
}

export function resolveBaseUrl(win: Pick<Window, 'RAGFORGE_BASE_URL' | 'location'>): string {
    if (win.RAGFORGE_BASE_URL) {
        return win.RAGFORGE_BASE_URL.replace(/\/$/, '');
    }
    const params = new URLSearchParams(win.location?.search ?? '');
    const fromQuery = params.get('service');
    if (fromQuery) {
        return fromQuery.replace(/\/$/, '');
    }
    return DEFAULT_BASE_URL;
}
