// Pure DOM builders. Nothing here mutates a bundle or touches the service;
// every function takes data in and hands one detached element back.

import { ChatTurn, RetrievedItem, UNANSWERABLE } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K,
    className?: string,
    text?: string,
): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

export function renderAnswer(answer: string): HTMLElement {
    const unanswerable = answer === UNANSWERABLE;
    const box = el('div', unanswerable ? 'answer answer-unanswerable' : 'answer');
    // One block per line keeps numbered steps as discrete rows.
    for (const line of answer.split('\n')) {
        box.appendChild(el('div', 'answer-line', line));
    }
    return box;
}

function sourceRow(item: RetrievedItem): HTMLElement {
    const row = el('li', 'source-row');
    row.appendChild(el('span', 'source-rank', `#${item.rank}`));
    row.appendChild(el('span', 'source-kind', item.kind));
    row.appendChild(el('span', 'source-score', item.score.toFixed(3)));
    row.appendChild(el('span', 'source-question', item.question ?? item.item_id));
    if (item.product_tags.length > 0) {
        row.appendChild(el('span', 'source-products', item.product_tags.join(', ')));
    }
    if (item.url) {
        const link = el('a', 'source-url', item.url);
        link.setAttribute('href', item.url);
        link.setAttribute('target', '_blank');
        row.appendChild(link);
    }
    return row;
}

export function renderSources(items: RetrievedItem[]): HTMLElement {
    const panel = el('details', 'sources-panel');
    panel.appendChild(el('summary', 'panel-title', `Sources (${items.length})`));
    const list = el('ul', 'source-list');
    for (const item of items) {
        list.appendChild(sourceRow(item));
    }
    panel.appendChild(list);
    return panel;
}

export function renderTrace(turn: ChatTurn): HTMLElement {
    const panel = el('details', 'trace-panel');
    panel.appendChild(el('summary', 'panel-title', 'Trace'));

    const products = el('div', 'trace-products');
    if (turn.manualProducts && turn.manualProducts.length > 0) {
        products.appendChild(el('span', 'trace-label', 'products (manual product)'));
        products.appendChild(
            el('span', 'trace-value', turn.manualProducts.join(', ')),
        );
    } else {
        products.appendChild(el('span', 'trace-label', `products (${turn.bundle.products.method})`));
        const names = turn.bundle.products.products.map(
            ([name, conf]) => `${name} (${conf.toFixed(2)})`,
        );
        products.appendChild(el('span', 'trace-value', names.join(', ') || 'none'));
    }
    panel.appendChild(products);

    const drops = el('div', 'trace-drops');
    drops.appendChild(el('span', 'trace-label', `dropped duplicates (${turn.bundle.dropped_duplicates.length})`));
    const dropList = el('ul', 'drop-list');
    for (const [kept, dropped, reason] of turn.bundle.dropped_duplicates) {
        dropList.appendChild(el('li', 'drop-row', `kept ${kept}, dropped ${dropped} (${reason})`));
    }
    drops.appendChild(dropList);
    panel.appendChild(drops);

    if (turn.bundle.prompt) {
        const prompt = el('div', 'trace-prompt');
        prompt.appendChild(el('span', 'trace-label', 'assembled prompt'));
        const pre = el('pre', 'prompt-text', turn.bundle.prompt);
        prompt.appendChild(pre);
        panel.appendChild(prompt);
    }
    return panel;
}

export function renderTurn(turn: ChatTurn): HTMLElement {
    const box = el('article', 'turn');
    const header = el('div', 'turn-query', turn.query);
    if (turn.manualProducts && turn.manualProducts.length > 0) {
        header.appendChild(el('span', 'turn-badge', 'manual product'));
    }
    box.appendChild(header);
    box.appendChild(renderAnswer(turn.bundle.answer));
    if (turn.bundle.used_items.length > 0) {
        box.appendChild(renderSources(turn.bundle.used_items));
    }
    box.appendChild(renderTrace(turn));
    return box;
}

export function renderErrorBanner(message: string, onRetry: () => void): HTMLElement {
    const banner = el('div', 'error-banner');
    banner.appendChild(el('span', 'error-text', message));
    const retry = el('button', 'retry-button', 'Retry');
    retry.setAttribute('type', 'button');
    retry.addEventListener('click', onRetry);
    banner.appendChild(retry);
    return banner;
}
