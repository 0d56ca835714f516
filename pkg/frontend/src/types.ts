// Wire types for the answering service JSON endpoints.

export interface RetrievedItem {
    item_id: string;
    kind: string;
    question: string | null;
    answer: string | null;
    url: string | null;
    product_tags: string[];
    score: number;
    rank: number;
}

export interface IntentResult {
    // [product name, confidence] pairs, confidence non-increasing
    products: [string, number][];
    method: string;
}

export type DropEntry = [kept: string, dropped: string, reason: string];

export interface AnswerBundle {
    answer: string;
    used_items: RetrievedItem[];
    dropped_duplicates: DropEntry[];
    products: IntentResult;
    prompt: string;
    timings?: Record<string, number>;
}

export interface HealthInfo {
    status: string;
    index_size: number;
    projection_version: number;
}

export interface ServiceConfig {
    products: string[];
    retrieval: { k: number; context_budget: number; min_score: number };
}

export interface ChatTurn {
    query: string;
    bundle: AnswerBundle;
    timestamp: Date;
    // non-empty when the user forced a product filter for this turn
    manualProducts: string[] | null;
}

export const UNANSWERABLE = 'This question cannot be answered at the moment.';
