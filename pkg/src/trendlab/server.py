"""HTTP backend for the labeling UI.

Serves series data read-only and accepts label documents, one JSON file per
(stock, expert) pair, written atomically.  This is a single-purpose local
service, not a general API: no auth, last write per expert wins.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
import threading
from collections import defaultdict
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import HTMLResponse
from fastapi.staticfiles import StaticFiles

from .labels import OverlapError, doc_to_windows, validate_windows, windows_to_doc
from .marketdata import OhlcSeries, load_series_dir, to_log

__all__ = ["create_app", "serve"]

_ID_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")

_PLACEHOLDER = """<!doctype html>
<html><head><title>trendlab labeler</title></head>
<body>
<h1>trendlab labeler backend</h1>
<p>The API is up. Build the frontend (<code>npm run build</code> in
<code>frontend/</code>) and pass its <code>dist/</code> directory to serve the UI here.</p>
</body></html>
"""


def _check_id(value: str, what: str) -> str:
    if not _ID_RE.match(value) or "__" in value:
        raise HTTPException(status_code=400, detail=f"bad {what} {value!r}")
    return value


def create_app(
    series_dir: str | Path,
    labels_dir: str | Path,
    static_dir: str | Path | None = None,
) -> FastAPI:
    series_dir = Path(series_dir)
    labels_dir = Path(labels_dir)
    if not series_dir.is_dir():
        raise ValueError(f"series dir {series_dir} does not exist")
    labels_dir.mkdir(parents=True, exist_ok=True)

    app = FastAPI(title="trendlab labeler", docs_url=None, redoc_url=None)
    series_cache: dict[str, OhlcSeries] = {}
    write_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)

    def get_series(stock_id: str) -> OhlcSeries:
        if stock_id not in series_cache:
            path = series_dir / f"{stock_id}.csv"
            if not path.is_file():
                raise HTTPException(status_code=404, detail=f"no series {stock_id!r}")
            series_cache[stock_id] = load_series_dir(series_dir)[stock_id]
        return series_cache[stock_id]

    def label_path(stock_id: str, expert_id: str) -> Path:
        return labels_dir / f"{stock_id}__{expert_id}.json"

    @app.get("/api/stocks")
    def list_stocks() -> list[str]:
        return sorted(p.stem for p in series_dir.glob("*.csv"))

    @app.get("/api/series/{stock_id}")
    def get_series_json(stock_id: str, scale: str = "raw") -> dict:
        _check_id(stock_id, "stock id")
        if scale not in ("raw", "log"):
            raise HTTPException(status_code=400, detail="scale must be 'raw' or 'log'")
        series = get_series(stock_id)
        if scale == "log":
            series = to_log(series)
        return {
            "stock_id": stock_id,
            "scale": scale,
            "bars": [
                {
                    "date": b.date.isoformat(),
                    "open": b.open,
                    "high": b.high,
                    "low": b.low,
                    "close": b.close,
                }
                for b in series.bars
            ],
        }

    @app.get("/api/labels/{stock_id}")
    def get_labels(stock_id: str, expert: str | None = None) -> dict:
        _check_id(stock_id, "stock id")
        if expert is None:
            prefix = f"{stock_id}__"
            experts = sorted(
                p.stem[len(prefix) :]
                for p in labels_dir.glob(f"{prefix}*.json")
            )
            return {"stock_id": stock_id, "experts": experts}
        _check_id(expert, "expert id")
        path = label_path(stock_id, expert)
        if not path.is_file():
            return {"stock_id": stock_id, "expert_id": expert, "windows": []}
        return json.loads(path.read_text(encoding="utf-8"))

    @app.post("/api/labels/{stock_id}")
    def save_labels(stock_id: str, doc: dict) -> dict:
        _check_id(stock_id, "stock id")
        if doc.get("stock_id") != stock_id:
            raise HTTPException(
                status_code=400,
                detail=f"document stock_id {doc.get('stock_id')!r} does not match URL",
            )
        expert = doc.get("expert_id", "")
        _check_id(expert, "expert id")
        series = get_series(stock_id)
        try:
            windows = doc_to_windows(doc)
            validate_windows(windows, series_len=len(series))
        except OverlapError as exc:
            raise HTTPException(
                status_code=422,
                detail={"error": str(exc), "offending": exc.offending},
            ) from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise HTTPException(status_code=422, detail={"error": str(exc)}) from exc

        canonical = (
            windows_to_doc(stock_id, expert, windows)
            if windows
            else {"stock_id": stock_id, "expert_id": expert, "windows": []}
        )
        payload = json.dumps(canonical, indent=2) + "\n"
        with write_locks[stock_id]:
            fd, tmp = tempfile.mkstemp(dir=labels_dir, suffix=".tmp")
            try:
                with os.fdopen(fd, "w", encoding="utf-8") as fh:
                    fh.write(payload)
                os.replace(tmp, label_path(stock_id, expert))
            except BaseException:
                if os.path.exists(tmp):
                    os.unlink(tmp)
                raise
        return {"saved": len(windows), "stock_id": stock_id, "expert_id": expert}

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:

        @app.get("/", response_class=HTMLResponse)
        def placeholder() -> str:
            return _PLACEHOLDER

    return app


def serve(
    series_dir: str | Path,
    labels_dir: str | Path,
    port: int = 8000,
    static_dir: str | Path | None = None,
    host: str = "127.0.0.1",
) -> None:
    import uvicorn

    app = create_app(series_dir, labels_dir, static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
