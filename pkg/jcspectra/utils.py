import io
import csv
import sys
import json
import math
import yaml
import logging
from enum import Enum
from pathlib import Path

import numpy as np
from tqdm import tqdm

from jcspectra.constants import NUMBER_FORMAT, OutputFormat

def load_file(file_path: Path | str):
    """Load files based on their extension."""
    file_path = Path(file_path)
    if file_path.suffix == ".json":
        return json.loads(file_path.read_text())
    elif file_path.suffix == ".yaml":
        return yaml.safe_load(file_path.read_text())
    else:
        return file_path.read_text()

def format_number(value) -> str:
    """Fixed 15-significant-digit rendering; empty for missing or non-finite values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return ""
        return format(float(value), NUMBER_FORMAT)
    if isinstance(value, Enum):
        return str(value.value)
    return str(value)

def to_jsonable(value):
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            return None
        return float(format(float(value), NUMBER_FORMAT))
    return value

def render_csv(header: list[str], rows: list[list]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(cell) for cell in row])
    return buffer.getvalue()

def render_json(header: list[str], rows: list[list], meta: dict) -> str:
    report = {
        "meta": to_jsonable(meta),
        "rows": [dict(zip(header, to_jsonable(list(row)))) for row in rows],
    }
    return json.dumps(report, ensure_ascii=False, indent=2) + "\n"

def write_table(header: list[str], rows: list[list], meta: dict,
                fmt: OutputFormat = OutputFormat.CSV, output: Path | None = None) -> str:
    """Render a report table and send it to `output`, or to stdout when no path is given."""
    if fmt is OutputFormat.JSON:
        text = render_json(header, rows, meta)
    else:
        text = render_csv(header, rows)
    if output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        output = Path(output)
        output.parent.mkdir(parents=True, exist_ok=True)
        output.write_text(text)
    return text

class TqdmStreamHandler(logging.StreamHandler):
    def __init__(self, stream=None):
        super().__init__(stream or sys.stderr)
    def emit(self, record):
        try:
            msg = self.format(record)
            tqdm.write(msg, file=self.stream)
            self.flush()
        except Exception:
            self.handleError(record)

def setup_logger(
    log_file: Path | None,
    logger_name: str,
    run_id: str,
    mode: str = "w",
    level: int = logging.INFO,
    handle_tqdm: bool = False
):
    """Configure `logger_name` (normally the package logger) for one run.

    Module loggers below it propagate here. Previous handlers are dropped so
    repeated runs in one process do not duplicate output.
    """
    logger = logging.getLogger(logger_name)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()
    logger.setLevel(level)
    logger.propagate = False

    if log_file is not None:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(log_file, mode=mode)
        handler.setFormatter(logging.Formatter("[%(levelname)s] - %(asctime)s - %(message)s"))
        logger.addHandler(handler)
        setattr(logger, "log_file", log_file)

    handler = TqdmStreamHandler() if handle_tqdm else logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(f"[%(levelname)s] - %(asctime)s - {run_id} - %(message)s"))
    logger.addHandler(handler)
    return logger
