import json
import logging
import os
import sys

from pythonjsonlogger.json import JsonFormatter

CONFIG_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config", "settings.json")
SETTINGS_ENV = "CHUNKPUNCT_SETTINGS"

DEFAULTS = {
    "chunk_size": 30,
    "overlap": 15,
    "min_words_cut": 7,
    "workers": 4,
    "batch_size": 64,
    "model_timeout": 60.0,
    "seed": 0,
    "format": "plain",
    "log_level": "INFO",
    "log_format": "text",
}


def settings_path():
    return os.environ.get(SETTINGS_ENV, CONFIG_PATH)


def load_settings(path=None):
    path = path or settings_path()
    settings = dict(DEFAULTS)
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8") as f:
            settings.update(json.load(f))
    return settings


def save_settings(data, path=None):
    with open(path or settings_path(), "w", encoding="utf-8") as f:
        json.dump(data, f, indent=4)


def configure_logging(level="INFO", fmt="text"):
    """Send logs to stderr, either "[logger] message" lines or JSON records."""
    handler = logging.StreamHandler(sys.stderr)
    if fmt == "json":
        handler.setFormatter(JsonFormatter("%(asctime)s %(levelname)s %(name)s %(message)s"))
    else:
        handler.setFormatter(logging.Formatter("[%(name)s] %(levelname)s %(message)s"))

    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level.upper() if isinstance(level, str) else level)


PUBLISHED_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "config", "published_results.json")


def load_published_results(path=None):
    """Named per-class result tables kept for `compare` (report JSON layout)."""
    with open(path or PUBLISHED_PATH, "r", encoding="utf-8") as f:
        return json.load(f)
