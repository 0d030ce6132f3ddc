"""trendlab: long-term trend-change detection on candlestick images.

Three small convolutional models share one pipeline: a change detector
(is there a state change in this slice?), a change locator (where?), and a
trend classifier (up, down or flat?).  The package covers the whole loop:
OHLC ingestion, expert label handling, chart rasterization, the CTF dataset
format, a from-scratch CNN engine, evaluation metrics, and a daily trading
simulation that scores the models in profit terms.
"""

__version__ = "0.1.0"
