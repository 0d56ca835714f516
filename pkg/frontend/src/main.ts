import { ApiClient } from './api.js';
import { ChatApp } from './app.js';
import { resolveBaseUrl } from './config.js';

function mustGet<T extends HTMLElement>(id: string): T {
    const node = document.getElementById(id);
    if (!node) throw new Error(`missing element #${id}`);
    return node as T;
}

const api = new ApiClient(resolveBaseUrl(window));
const app = new ChatApp(api, {
    form: mustGet<HTMLFormElement>('ask-form'),
    input: mustGet<HTMLInputElement>('query-input'),
    sendButton: mustGet<HTMLButtonElement>('send-button'),
    turnLog: mustGet<HTMLElement>('turn-log'),
    status: mustGet<HTMLElement>('service-status'),
    overridePanel: mustGet<HTMLElement>('override-panel'),
});

void app.init();
