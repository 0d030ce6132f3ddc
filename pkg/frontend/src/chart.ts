// Candlestick chart on a plain canvas: log-scale prices, pan/zoom, and
// drag selection over bar ranges. The coordinate math lives in
// ChartGeometry, separate from the DOM so it can be tested headless.

import { Bar, WindowDoc, WindowState } from './types.js';

export interface View {
    first: number; // leftmost visible bar index
    count: number; // number of visible bars
}

export const MIN_PX_PER_BAR = 2;
export const MIN_VISIBLE = 10;

const UP_COLOR = '#1e9e46';
const DOWN_COLOR = '#d03a34';
const BAND_COLORS: Record<WindowState, string> = {
    trend_up: 'rgba(76, 175, 80, 0.22)',
    trend_down: 'rgba(229, 57, 53, 0.22)',
    flat: 'rgba(120, 120, 120, 0.25)',
    unknown: 'rgba(255, 193, 7, 0.25)',
};

/** Keep a view inside the series and above the per-bar pixel floor. */
export function clampView(view: View, nBars: number, width: number): View {
    if (nBars === 0) return { first: 0, count: 0 };
    const maxCount = Math.max(MIN_VISIBLE, Math.floor(width / MIN_PX_PER_BAR));
    let count = Math.round(view.count);
    count = Math.max(Math.min(MIN_VISIBLE, nBars), Math.min(count, Math.min(nBars, maxCount)));
    let first = Math.round(view.first);
    first = Math.max(0, Math.min(first, nBars - count));
    return { first, count };
}

export function zoomView(view: View, factor: number, anchorBar: number, nBars: number, width: number): View {
    const count = view.count * factor;
    const rel = (anchorBar - view.first) / view.count;
    return clampView({ first: anchorBar - rel * count, count }, nBars, width);
}

export function panView(view: View, deltaBars: number, nBars: number, width: number): View {
    return clampView({ first: view.first + deltaBars, count: view.count }, nBars, width);
}

export class ChartGeometry {
    constructor(
        public readonly width: number,
        public readonly height: number,
        public readonly view: View,
        public readonly pricePad = 0.02,
    ) {}

    // bars own equal slots; bodies leave a one-pixel gutter, as in training
    barLeft(bar: number): number {
        const k = bar - this.view.first;
        return Math.floor((k * this.width) / this.view.count);
    }

    bodyWidth(): number {
        return Math.max(1, Math.floor(this.width / this.view.count) - 1);
    }

    barCenter(bar: number): number {
        return this.barLeft(bar) + this.bodyWidth() / 2;
    }

    /** Snap a pixel to the bar whose slot owns it. */
    xToBar(x: number): number {
        // slots start at the floored boundary, so invert that, not the
        // unfloored partition: largest k with floor(k*width/count) <= x
        const k = Math.ceil(((x + 1) * this.view.count) / this.width) - 1;
        return this.view.first + Math.max(0, Math.min(k, this.view.count - 1));
    }

    yFor(price: number, lo: number, hi: number): number {
        const pad = (hi - lo || 1) * this.pricePad;
        const top = hi + pad;
        const bottom = lo - pad;
        const frac = (top - price) / (top - bottom);
        return frac * (this.height - 1);
    }
}

export interface ChartCallbacks {
    onSelect(start: number, end: number): void;
    onInspect(bar: number): void;
}

export class ChartView {
    private bars: Bar[] = [];
    private view: View = { first: 0, count: 1 };
    private windows: WindowDoc[] = [];
    private selection: [number, number] | null = null;
    private dragFrom: number | null = null;
    private panFrom: { x: number; first: number } | null = null;

    constructor(
        private canvas: HTMLCanvasElement,
        private callbacks: ChartCallbacks,
    ) {
        canvas.addEventListener('mousedown', (e) => this.onDown(e));
        canvas.addEventListener('mousemove', (e) => this.onMove(e));
        window.addEventListener('mouseup', (e) => this.onUp(e));
        canvas.addEventListener('wheel', (e) => this.onWheel(e), { passive: false });
    }

    setBars(bars: Bar[]): void {
        this.bars = bars;
        this.view = clampView({ first: Math.max(0, bars.length - 200), count: 200 },
            bars.length, this.canvas.width);
        this.selection = null;
        this.draw();
    }

    setWindows(windows: WindowDoc[]): void {
        this.windows = windows;
        this.draw();
    }

    clearSelection(): void {
        this.selection = null;
        this.draw();
    }

    selected(): [number, number] | null {
        return this.selection;
    }

    draw(): void {
        const ctx = this.canvas.getContext('2d')!;
        const { width, height } = this.canvas;
        ctx.fillStyle = '#ffffff';
        ctx.fillRect(0, 0, width, height);
        if (this.bars.length === 0) {
            ctx.fillStyle = '#666666';
            ctx.font = '16px sans-serif';
            ctx.textAlign = 'center';
            ctx.fillText('no bars in this series', width / 2, height / 2);
            return;
        }
        const g = new ChartGeometry(width, height, this.view);
        const last = Math.min(this.view.first + this.view.count, this.bars.length) - 1;
        let lo = Infinity;
        let hi = -Infinity;
        for (let i = this.view.first; i <= last; i++) {
            lo = Math.min(lo, this.bars[i].low);
            hi = Math.max(hi, this.bars[i].high);
        }

        for (const w of this.windows) this.band(ctx, g, w.start, w.end, BAND_COLORS[w.state]);
        if (this.selection) {
            this.band(ctx, g, this.selection[0], this.selection[1], 'rgba(33, 150, 243, 0.30)');
        }

        const bodyW = g.bodyWidth();
        for (let i = this.view.first; i <= last; i++) {
            const b = this.bars[i];
            const color = b.close >= b.open ? UP_COLOR : DOWN_COLOR;
            const cx = Math.floor(g.barCenter(i));
            ctx.strokeStyle = color;
            ctx.beginPath();
            ctx.moveTo(cx + 0.5, g.yFor(b.high, lo, hi));
            ctx.lineTo(cx + 0.5, g.yFor(b.low, lo, hi));
            ctx.stroke();
            const yo = g.yFor(b.open, lo, hi);
            const yc = g.yFor(b.close, lo, hi);
            const top = Math.min(yo, yc);
            ctx.fillStyle = color;
            ctx.fillRect(g.barLeft(i), top, bodyW, Math.max(1, Math.abs(yo - yc)));
        }

        ctx.fillStyle = '#444444';
        ctx.font = '12px sans-serif';
        ctx.textAlign = 'left';
        ctx.fillText(this.bars[this.view.first].date, 4, height - 6);
        ctx.textAlign = 'right';
        ctx.fillText(this.bars[last].date, width - 4, height - 6);
    }

    private band(ctx: CanvasRenderingContext2D, g: ChartGeometry, start: number, end: number, color: string): void {
        const lastVisible = this.view.first + this.view.count - 1;
        if (end < this.view.first || start > lastVisible) return;
        const a = Math.max(start, this.view.first);
        const b = Math.min(end, lastVisible);
        const x0 = g.barLeft(a);
        const x1 = g.barLeft(b) + g.bodyWidth();
        ctx.fillStyle = color;
        ctx.fillRect(x0, 0, x1 - x0, this.canvas.height);
    }

    private barAt(e: MouseEvent): number {
        const rect = this.canvas.getBoundingClientRect();
        const x = ((e.clientX - rect.left) / rect.width) * this.canvas.width;
        const g = new ChartGeometry(this.canvas.width, this.canvas.height, this.view);
        return Math.min(g.xToBar(x), this.bars.length - 1);
    }

    private onDown(e: MouseEvent): void {
        if (this.bars.length === 0) return;
        if (e.shiftKey || e.button === 1) {
            this.panFrom = { x: e.clientX, first: this.view.first };
            return;
        }
        if (e.button !== 0) return;
        this.dragFrom = this.barAt(e);
        this.selection = [this.dragFrom, this.dragFrom];
        this.draw();
    }

    private onMove(e: MouseEvent): void {
        if (this.panFrom) {
            const rect = this.canvas.getBoundingClientRect();
            const perPx = this.view.count / rect.width;
            const delta = Math.round((this.panFrom.x - e.clientX) * perPx);
            this.view = panView({ first: this.panFrom.first, count: this.view.count },
                delta, this.bars.length, this.canvas.width);
            this.draw();
            return;
        }
        if (this.dragFrom === null) return;
        this.selection = [this.dragFrom, this.barAt(e)];
        this.draw();
    }

    private onUp(e: MouseEvent): void {
        if (this.panFrom) {
            this.panFrom = null;
            return;
        }
        if (this.dragFrom === null) return;
        const from = this.dragFrom;
        this.dragFrom = null;
        const to = this.barAt(e);
        this.selection = [Math.min(from, to), Math.max(from, to)];
        this.draw();
        if (from === to) this.callbacks.onInspect(to);
        this.callbacks.onSelect(this.selection[0], this.selection[1]);
    }

    private onWheel(e: WheelEvent): void {
        if (this.bars.length === 0) return;
        e.preventDefault();
        const factor = e.deltaY > 0 ? 1.2 : 1 / 1.2;
        this.view = zoomView(this.view, factor, this.barAt(e), this.bars.length, this.canvas.width);
        this.draw();
    }
}
