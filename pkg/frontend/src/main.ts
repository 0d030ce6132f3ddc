// Page wiring: stock/expert pickers, the chart, mark buttons, save.
// One AnnotationSession per loaded stock+expert; the dirty flag guards
// navigation until the draft is saved.

import { ApiError, LabelApi } from './api.js';
import { ChartView } from './chart.js';
import { AnnotationSession, MarkError } from './session.js';
import { MarkChoice, SeriesDoc } from './types.js';

const api = new LabelApi();

const stockSelect = document.getElementById('stock') as HTMLSelectElement;
const expertInput = document.getElementById('expert') as HTMLInputElement;
const loadButton = document.getElementById('load') as HTMLButtonElement;
const saveButton = document.getElementById('save') as HTMLButtonElement;
const deleteButton = document.getElementById('delete') as HTMLButtonElement;
const status = document.getElementById('status') as HTMLSpanElement;
const windowList = document.getElementById('windows') as HTMLUListElement;
const canvas = document.getElementById('chart') as HTMLCanvasElement;

let series: SeriesDoc | null = null;
let session: AnnotationSession | null = null;
let selection: [number, number] | null = null;

const chart = new ChartView(canvas, {
    onSelect(start, end) {
        selection = [start, end];
        if (session && session.blocking(start, end).length > 0) {
            say(`bars ${start}..${end} touch existing markup`, true);
        } else {
            say(`selected bars ${start}..${end}`);
        }
    },
    onInspect(bar) {
        const w = session?.windowAt(bar);
        if (w) say(`bar ${bar}: ${w.state} [${w.start}, ${w.end}]`);
    },
});

function say(message: string, warn = false): void {
    status.textContent = message;
    status.className = warn ? 'warn' : '';
}

function refresh(): void {
    if (!session) return;
    chart.setWindows(session.windows);
    saveButton.disabled = !session.dirty;
    windowList.replaceChildren(
        ...session.windows.map((w) => {
            const li = document.createElement('li');
            li.textContent = `[${w.start}, ${w.end}] ${w.state}`;
            return li;
        }),
    );
    document.title = session.dirty ? '* labeler' : 'labeler';
}

async function loadStock(): Promise<void> {
    const stockId = stockSelect.value;
    const expertId = expertInput.value.trim();
    if (!expertId) {
        say('enter an expert id first', true);
        return;
    }
    if (session?.dirty && !confirm('discard unsaved markup?')) return;
    try {
        series = await api.series(stockId, 'log');
        const doc = await api.labels(stockId, expertId);
        session = AnnotationSession.fromDoc(doc, series.bars.length);
        chart.setBars(series.bars);
        selection = null;
        refresh();
        say(`${stockId}: ${series.bars.length} bars, ${session.windows.length} saved windows`);
    } catch (err) {
        say(err instanceof Error ? err.message : String(err), true);
    }
}

function mark(choice: MarkChoice): void {
    if (!series || !session) {
        say('load a stock first', true);
        return;
    }
    if (!selection) {
        say('drag over the chart to select bars first', true);
        return;
    }
    try {
        const closes = series.bars.map((b) => b.close);
        const w = session.mark(selection[0], selection[1], choice, closes);
        chart.clearSelection();
        selection = null;
        refresh();
        say(`marked [${w.start}, ${w.end}] as ${w.state}`);
    } catch (err) {
        if (err instanceof MarkError && err.offending.length > 0) {
            say(`${err.message} (blocked by ${err.offending.map(([s, e]) => `[${s}, ${e}]`).join(' ')})`, true);
        } else {
            say(err instanceof Error ? err.message : String(err), true);
        }
    }
}

async function save(): Promise<void> {
    if (!session) return;
    try {
        const reply = await api.save(session.toDoc());
        session.markSaved();
        refresh();
        say(`saved ${reply.saved} windows for ${reply.expert_id}`);
    } catch (err) {
        if (err instanceof ApiError && err.offending.length > 0) {
            say(`server refused: ${err.message}`, true);
        } else {
            say(err instanceof Error ? err.message : String(err), true);
        }
    }
}

function removeSelected(): void {
    if (!session || !selection) {
        say('select a bar inside a window first', true);
        return;
    }
    if (session.removeAt(selection[0])) {
        refresh();
        say('window removed');
    } else {
        say('no window under the selection', true);
    }
}

loadButton.addEventListener('click', () => void loadStock());
saveButton.addEventListener('click', () => void save());
deleteButton.addEventListener('click', removeSelected);
for (const button of document.querySelectorAll<HTMLButtonElement>('button[data-choice]')) {
    button.addEventListener('click', () => mark(button.dataset.choice as MarkChoice));
}
window.addEventListener('beforeunload', (e) => {
    if (session?.dirty) e.preventDefault();
});

void (async () => {
    try {
        const stocks = await api.stocks();
        stockSelect.replaceChildren(
            ...stocks.map((s) => {
                const option = document.createElement('option');
                option.value = s;
                option.textContent = s;
                return option;
            }),
        );
        say(stocks.length ? `${stocks.length} stocks available` : 'no series on the server', !stocks.length);
    } catch (err) {
        say(err instanceof Error ? err.message : String(err), true);
    }
})();
