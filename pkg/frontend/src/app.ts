// Session wiring: one in-flight request at a time, append-only turn log,
// optional manual product override. The page holds no server state; a
// reload just refetches /health and /config.

import { ApiClient, ApiError } from './api.js';
import { renderErrorBanner, renderTurn } from './render.js';
import { ChatTurn } from './types.js';

export interface AppElements {
    form: HTMLFormElement;
    input: HTMLInputElement;
    sendButton: HTMLButtonElement;
    turnLog: HTMLElement;
    status: HTMLElement;
    overridePanel: HTMLElement;
}

export class ChatApp {
    readonly turns: ChatTurn[] = [];
    private override: string[] = [];
    private busy = false;

    constructor(
        private readonly api: ApiClient,
        private readonly ui: AppElements,
    ) {}

    async init(): Promise<void> {
        this.ui.form.addEventListener('submit', (event) => {
            event.preventDefault();
            void this.submit();
        });
        await this.checkHealth();
        await this.loadCatalog();
    }

    async checkHealth(): Promise<boolean> {
        try {
            const health = await this.api.health();
            this.ui.status.textContent =
                `connected: ${health.index_size} items, projection v${health.projection_version}`;
            this.ui.status.className = 'status status-ok';
            return true;
        } catch {
            this.ui.status.textContent = 'service unreachable';
            this.ui.status.className = 'status status-down';
            return false;
        }
    }

    async loadCatalog(): Promise<void> {
        let products: string[] = [];
        try {
            products = (await this.api.config()).products;
        } catch {
            return; // override UI stays empty; automatic intent still works
        }
        this.ui.overridePanel.textContent = '';
        for (const name of products) {
            const label = document.createElement('label');
            label.className = 'override-choice';
            const box = document.createElement('input');
            box.type = 'checkbox';
            box.value = name;
            box.addEventListener('change', () => this.readOverridePanel());
            label.appendChild(box);
            label.appendChild(document.createTextNode(name));
            this.ui.overridePanel.appendChild(label);
        }
    }

    private readOverridePanel(): void {
        const boxes = this.ui.overridePanel.querySelectorAll<HTMLInputElement>(
            'input[type=checkbox]',
        );
        const chosen: string[] = [];
        boxes.forEach((box) => {
            if (box.checked) chosen.push(box.value);
        });
        this.setProductOverride(chosen);
    }

    setProductOverride(products: string[]): void {
        this.override = [...products];
    }

    get productOverride(): string[] {
        return [...this.override];
    }

    private setBusy(busy: boolean): void {
        this.busy = busy;
        this.ui.input.disabled = busy;
        this.ui.sendButton.disabled = busy;
    }

    private clearErrorBanner(): void {
        this.ui.turnLog.querySelectorAll('.error-banner').forEach((node) => node.remove());
    }

    async submit(): Promise<void> {
        const query = this.ui.input.value.trim();
        if (!query || this.busy) return;
        await this.askAndRender(query);
    }

    async askAndRender(query: string): Promise<ChatTurn | null> {
        this.clearErrorBanner();
        this.setBusy(true);
        const manual = this.override.length > 0 ? [...this.override] : null;
        try {
            const bundle = await this.api.ask(query, manual);
            const turn: ChatTurn = {
                query,
                bundle,
                timestamp: new Date(),
                manualProducts: manual,
            };
            this.turns.push(turn);
            this.ui.turnLog.appendChild(renderTurn(turn));
            this.ui.input.value = '';
            return turn;
        } catch (err) {
            const message = err instanceof ApiError ? err.message : String(err);
            // Input stays as typed so the retry button can resubmit it.
            this.ui.input.value = query;
            this.ui.turnLog.appendChild(
                renderErrorBanner(`request failed: ${message}`, () => void this.submit()),
            );
            return null;
        } finally {
            this.setBusy(false);
        }
    }
}
