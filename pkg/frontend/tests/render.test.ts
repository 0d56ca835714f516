import { beforeEach, describe, expect, it } from 'vitest';

import { renderAnswer, renderErrorBanner, renderSources, renderTrace, renderTurn } from '../src/render.js';
import { ChatTurn, UNANSWERABLE } from '../src/types.js';
import { FIXTURE_BUNDLE } from './fixtures.js';

function fixtureTurn(manual: string[] | null = null): ChatTurn {
    return {
        query: 'how to create a blank PDF',
        bundle: structuredClone(FIXTURE_BUNDLE),
        timestamp: new Date('2024-06-01T12:00:00Z'),
        manualProducts: manual,
    };
}

beforeEach(() => {
    document.body.innerHTML = '';
});

describe('renderAnswer', () => {
    it('keeps numbered steps as separate lines', () => {
        const node = renderAnswer(FIXTURE_BUNDLE.answer);
        const lines = [...node.querySelectorAll('.answer-line')].map((n) => n.textContent);
        expect(lines).toEqual([
            '1. Open Acrobat and choose Tools > Create PDF.',
            '2. Click Blank Page.',
            '3. Click Create.',
        ]);
        expect(node.classList.contains('answer-unanswerable')).toBe(false);
    });

    it('styles the unanswerable reply distinctly', () => {
        const node = renderAnswer(UNANSWERABLE);
        expect(node.classList.contains('answer-unanswerable')).toBe(true);
        expect(node.textContent).toContain('cannot be answered');
    });
});

describe('renderSources', () => {
    it('lists kind, score, and url per item', () => {
        const panel = renderSources(FIXTURE_BUNDLE.used_items);
        expect(panel.querySelector('summary')?.textContent).toBe('Sources (2)');
        const rows = panel.querySelectorAll('.source-row');
        expect(rows).toHaveLength(2);
        const first = rows[0]!;
        expect(first.querySelector('.source-kind')?.textContent).toBe('generated_helpx_qa');
        expect(first.querySelector('.source-score')?.textContent).toBe('0.930');
        expect(first.querySelector('.source-url')?.getAttribute('href')).toBe(
            'https://example.com/acrobat/create-blank-pdf',
        );
    });

    it('is collapsible', () => {
        const panel = renderSources(FIXTURE_BUNDLE.used_items);
        expect(panel.tagName.toLowerCase()).toBe('details');
    });
});

describe('renderTrace', () => {
    it('shows detected products, drop log, and prompt', () => {
        const panel = renderTrace(fixtureTurn());
        expect(panel.querySelector('.trace-products')?.textContent).toContain('Adobe Acrobat');
        expect(panel.querySelector('.trace-products')?.textContent).toContain('fallback_default');
        expect(panel.querySelector('.drop-list')?.textContent).toContain(
            'kept acro-blank, dropped community-dup (credibility)',
        );
        expect(panel.querySelector('.prompt-text')?.textContent).toContain(
            'You are an assistant that helps humans use Adobe Acrobat.',
        );
    });

    it('labels manual overrides and swaps the products field', () => {
        const auto = renderTrace(fixtureTurn());
        const manual = renderTrace(fixtureTurn(['Adobe Illustrator']));
        expect(auto.querySelector('.trace-products')?.textContent).not.toContain('manual product');
        expect(manual.querySelector('.trace-products')?.textContent).toContain('manual product');
        expect(manual.querySelector('.trace-products')?.textContent).toContain('Adobe Illustrator');
        expect(auto.querySelector('.trace-products')?.textContent).not.toEqual(
            manual.querySelector('.trace-products')?.textContent,
        );
    });
});

describe('renderTurn', () => {
    it('renders populated sources and trace panels from a fixture bundle', () => {
        const node = renderTurn(fixtureTurn());
        expect(node.querySelector('.turn-query')?.textContent).toContain('how to create a blank PDF');
        expect(node.querySelectorAll('.sources-panel')).toHaveLength(1);
        expect(node.querySelectorAll('.trace-panel')).toHaveLength(1);
        expect(node.querySelectorAll('.source-row').length).toBeGreaterThan(0);
    });

    it('never mutates the bundle it renders', () => {
        const turn = fixtureTurn();
        const before = JSON.stringify(turn.bundle);
        renderTurn(turn);
        expect(JSON.stringify(turn.bundle)).toBe(before);
    });

    it('badges manual-product turns', () => {
        const node = renderTurn(fixtureTurn(['Adobe Illustrator']));
        expect(node.querySelector('.turn-badge')?.textContent).toBe('manual product');
    });
});

describe('renderErrorBanner', () => {
    it('shows the message and a retry button that fires the callback', () => {
        let retried = 0;
        const banner = renderErrorBanner('request failed: service unreachable', () => {
            retried += 1;
        });
        expect(banner.textContent).toContain('service unreachable');
        (banner.querySelector('.retry-button') as HTMLButtonElement).click();
        expect(retried).toBe(1);
    });
});
