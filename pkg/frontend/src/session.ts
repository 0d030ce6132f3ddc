// Annotation state for one stock + one expert: the draft window list,
// its invariants (ordered, non-overlapping, in range), and the dirty flag
// that gates navigation. All indices are inclusive bar indices.

import { LabelDoc, MarkChoice, WindowDoc, WindowState } from './types.js';

export class MarkError extends Error {
    // bar ranges that block the requested mark, for the visual cue
    constructor(message: string, public offending: Array<[number, number]> = []) {
        super(message);
        this.name = 'MarkError';
    }
}

/** OLS slope of y over x = 0..n-1; the direction convention downstream. */
export function olsSlope(y: number[]): number {
    const n = y.length;
    const xMean = (n - 1) / 2;
    let yMean = 0;
    for (const v of y) yMean += v;
    yMean /= n;
    let num = 0;
    let den = 0;
    for (let i = 0; i < n; i++) {
        num += (i - xMean) * (y[i] - yMean);
        den += (i - xMean) * (i - xMean);
    }
    return num / den;
}

/** The stored state for a mark: trends get their direction from the slope. */
export function stateForChoice(choice: MarkChoice, logCloses: number[]): WindowState {
    if (choice === 'flat') return 'flat';
    if (choice === 'na') return 'unknown';
    return olsSlope(logCloses) >= 0 ? 'trend_up' : 'trend_down';
}

function overlaps(a: WindowDoc, start: number, end: number): boolean {
    return a.start <= end && start <= a.end;
}

export class AnnotationSession {
    public windows: WindowDoc[] = [];
    public dirty = false;

    constructor(
        public readonly stockId: string,
        public readonly expertId: string,
        public readonly seriesLen: number,
    ) {
        if (!stockId || !expertId) throw new MarkError('stock and expert ids are required');
        if (seriesLen < 0) throw new MarkError('negative series length');
    }

    /** Load previously saved windows; validates like a fresh mark would. */
    static fromDoc(doc: LabelDoc, seriesLen: number): AnnotationSession {
        const session = new AnnotationSession(doc.stock_id, doc.expert_id, seriesLen);
        const sorted = [...doc.windows].sort((a, b) => a.start - b.start);
        for (const w of sorted) session.insert(w);
        session.dirty = false;
        return session;
    }

    toDoc(): LabelDoc {
        return {
            stock_id: this.stockId,
            expert_id: this.expertId,
            windows: this.windows.map((w) => ({ ...w })),
        };
    }

    /** Ranges that would block marking [start, end]; empty means clear. */
    blocking(start: number, end: number): Array<[number, number]> {
        return this.windows
            .filter((w) => overlaps(w, Math.min(start, end), Math.max(start, end)))
            .map((w) => [w.start, w.end]);
    }

    /**
     * Mark a dragged bar range. Endpoints may arrive in either order (the
     * drag direction is free); trends need at least two bars for a slope.
     * Overlap is rejected, never clipped: the expert resolves it by hand.
     */
    mark(a: number, b: number, choice: MarkChoice, logCloses: number[]): WindowDoc {
        const start = Math.min(a, b);
        const end = Math.max(a, b);
        if (!Number.isInteger(start) || !Number.isInteger(end)) {
            throw new MarkError(`bar indices must be integers, got [${a}, ${b}]`);
        }
        if (start < 0 || end >= this.seriesLen) {
            throw new MarkError(`[${start}, ${end}] outside series of length ${this.seriesLen}`);
        }
        if (choice === 'trend' && end - start < 1) {
            throw new MarkError('a trend needs at least two bars');
        }
        const hit = this.blocking(start, end);
        if (hit.length > 0) {
            throw new MarkError(`[${start}, ${end}] overlaps existing markup`, hit);
        }
        const state = stateForChoice(choice, logCloses.slice(start, end + 1));
        const w: WindowDoc = { start, end, state };
        this.insert(w);
        this.dirty = true;
        return w;
    }

    /** Remove the window covering the given bar; true if one was there. */
    removeAt(bar: number): boolean {
        const idx = this.windows.findIndex((w) => w.start <= bar && bar <= w.end);
        if (idx < 0) return false;
        this.windows.splice(idx, 1);
        this.dirty = true;
        return true;
    }

    windowAt(bar: number): WindowDoc | undefined {
        return this.windows.find((w) => w.start <= bar && bar <= w.end);
    }

    markSaved(): void {
        this.dirty = false;
    }

    private insert(w: WindowDoc): void {
        if (w.start > w.end || w.start < 0 || w.end >= this.seriesLen) {
            throw new MarkError(`bad window [${w.start}, ${w.end}]`);
        }
        const hit = this.blocking(w.start, w.end);
        if (hit.length > 0) {
            throw new MarkError(`[${w.start}, ${w.end}] overlaps existing markup`, hit);
        }
        const at = this.windows.findIndex((x) => x.start > w.start);
        if (at < 0) this.windows.push(w);
        else this.windows.splice(at, 0, w);
    }
}
