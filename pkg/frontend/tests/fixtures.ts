import { AnswerBundle } from '../src/types.js';

export const FIXTURE_BUNDLE: AnswerBundle = {
    answer: '1. Open Acrobat and choose Tools > Create PDF.\n2. Click Blank Page.\n3. Click Create.',
    used_items: [
        {
            item_id: 'acro-blank',
            kind: 'generated_helpx_qa',
            question: 'How to create a blank PDF',
            answer: '1. Open Acrobat and choose Tools > Create PDF.\n2. Click Blank Page.\n3. Click Create.',
            url: 'https://example.com/acrobat/create-blank-pdf',
            product_tags: ['Adobe Acrobat'],
            score: 0.93,
            rank: 1,
        },
        {
            item_id: 'illu-blank',
            kind: 'generated_helpx_qa',
            question: 'How to create a blank PDF template',
            answer: 'Select File > New From Template and open the Blank Templates folder.',
            url: 'https://example.com/illustrator/blank-templates',
            product_tags: ['Adobe Illustrator'],
            score: 0.81,
            rank: 2,
        },
    ],
    dropped_duplicates: [['acro-blank', 'community-dup', 'credibility']],
    products: { products: [['Adobe Acrobat', 0.13]], method: 'fallback_default' },
    prompt:
        'You are an assistant that helps humans use Adobe Acrobat. ' +
        'You will be given a list of question-answer pairs (some pairs might be irrelevant) and a user query. [...]',
    timings: { total_ms: 12.5 },
};

export interface StubCall {
    path: string;
    body: unknown;
}

export interface StubService {
    fetch: typeof fetch;
    calls: StubCall[];
    failNext: (times: number) => void;
}

/** fetch stand-in that answers /health, /config, and /ask like the service. */
export function stubService(bundle: AnswerBundle = FIXTURE_BUNDLE): StubService {
    const calls: StubCall[] = [];
    let failuresLeft = 0;

    const impl = async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
        const url = String(input);
        const path = url.replace(/^https?:\/\/[^/]+/, '') || '/';
        const body = init?.body ? JSON.parse(String(init.body)) : null;
        calls.push({ path, body });
        if (failuresLeft > 0) {
            failuresLeft -= 1;
            throw new TypeError('NetworkError: connection refused');
        }
        const json = (payload: unknown) =>
            new Response(JSON.stringify(payload), {
                status: 200,
                headers: { 'Content-Type': 'application/json' },
            });
        if (path === '/health') {
            return json({ status: 'ok', index_size: 18, projection_version: 2 });
        }
        if (path === '/config') {
            return json({
                products: ['Adobe Acrobat', 'Adobe Illustrator', 'Adobe Photoshop'],
                retrieval: { k: 8, context_budget: 5, min_score: 0.15 },
            });
        }
        if (path === '/ask') {
            const echoed: AnswerBundle = structuredClone(bundle);
            if (body?.products) {
                // Mirror a product override into the detected-products slot so
                // tests can see the effective filter server-side.
                echoed.products = {
                    products: body.products.map((name: string) => [name, 1.0]),
                    method: 'override',
                };
            }
            return json(echoed);
        }
        return new Response('not found', { status: 404 });
    };

    return {
        fetch: impl as typeof fetch,
        calls,
        failNext: (times: number) => {
            failuresLeft = times;
        },
    };
}
