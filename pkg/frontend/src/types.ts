// JSON shapes of the label-store HTTP API, mirrored field for field.

export interface Bar {
    date: string;
    open: number;
    high: number;
    low: number;
    close: number;
}

export interface SeriesDoc {
    stock_id: string;
    scale: 'raw' | 'log';
    bars: Bar[];
}

export type WindowState = 'trend_up' | 'trend_down' | 'flat' | 'unknown';

export interface WindowDoc {
    start: number;
    end: number;
    state: WindowState;
}

export interface LabelDoc {
    stock_id: string;
    expert_id: string;
    windows: WindowDoc[];
}

export interface ExpertsDoc {
    stock_id: string;
    experts: string[];
}

export interface SaveReply {
    saved: number;
    stock_id: string;
    expert_id: string;
}

// What the expert actually chooses in the UI. Direction is not asked for:
// trends are generic and the stored up/down state comes from the slope.
export type MarkChoice = 'trend' | 'flat' | 'na';
