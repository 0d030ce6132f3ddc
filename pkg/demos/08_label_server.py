"""The label store over HTTP: the API the annotation frontend talks to.

Spins up a real uvicorn server on an ephemeral port, drives it with
nothing but urllib, and shuts it down. Series live as CSV files in one
directory, label documents as `<stock>__<expert>.json` in another.
"""
import json
import tempfile
import threading
import time
import urllib.error
import urllib.request
from pathlib import Path

import uvicorn

from trendlab.marketdata import write_ohlc_csv
from trendlab.server import create_app
from trendlab.synthetic import SyntheticConfig, generate_stock

root = Path(tempfile.mkdtemp(prefix="server_demo_"))
series_dir, labels_dir = root / "series", root / "labels"
series_dir.mkdir()
labels_dir.mkdir()
for i, seed in enumerate((5, 6)):
    series, _, _ = generate_stock(f"SYN{i:03d}", seed, SyntheticConfig(n_bars=120, seg_min=30, seg_max=60))
    write_ohlc_csv(series, series_dir / f"{series.stock_id}.csv")

server = uvicorn.Server(uvicorn.Config(
    create_app(series_dir, labels_dir), host="127.0.0.1", port=0, log_level="warning"))
thread = threading.Thread(target=server.run, daemon=True)
thread.start()
while not server.started:
    time.sleep(0.02)
port = server.servers[0].sockets[0].getsockname()[1]
base = f"http://127.0.0.1:{port}"
print(f"serving on {base}")


def call(method, path, payload=None):
    req = urllib.request.Request(
        base + path, method=method,
        data=None if payload is None else json.dumps(payload).encode(),
        headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


print(f"stocks: {call('GET', '/api/stocks')}")
series = call("GET", "/api/series/SYN000?scale=log")
print(f"SYN000 series: {len(series['bars'])} bars, first close {series['bars'][0]['close']:.4f}")

doc = {"stock_id": "SYN000", "expert_id": "alice", "windows": [
    {"start": 0, "end": 49, "state": "trend_up"},
    {"start": 50, "end": 99, "state": "flat"},
]}
print(f"save: {call('POST', '/api/labels/SYN000', doc)}")
print(f"read back: {call('GET', '/api/labels/SYN000?expert=alice')['windows']}")
print(f"experts on file: {call('GET', '/api/labels/SYN000')['experts']}")

# overlapping windows are rejected with a structured 422
bad = {"stock_id": "SYN000", "expert_id": "alice", "windows": [
    {"start": 0, "end": 30, "state": "trend_up"},
    {"start": 30, "end": 60, "state": "flat"},
]}
try:
    call("POST", "/api/labels/SYN000", bad)
except urllib.error.HTTPError as exc:
    detail = json.loads(exc.read())["detail"]
    print(f"overlap rejected with {exc.code}: {detail['error']} {detail['offending']}")

server.should_exit = True
thread.join(timeout=5)
print("server stopped")
