"""Worker module - background report writer for JSON Lines and CSV output"""

import csv
import io
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path
from queue import Empty, Queue
from threading import Event, Thread

import numpy as np

from .constants import (
    LOGGER_NAME,
    QUEUE_GET_TIMEOUT,
    WRITER_BUFFER_RECORDS,
    WRITER_QUEUE_SIZE,
    WRITER_THREAD_TIMEOUT,
)
from .errors import InvalidParameters

log = logging.getLogger(LOGGER_NAME)

FORMATS = ("json", "csv")
PARAM_KEYS = ("q", "d", "k", "h")


def _plain(value):
    """json.dumps fallback for numpy scalars, arrays and fractions"""
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Fraction):
        return float(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")


def encode_json(record: dict) -> str:
    return json.dumps(record, sort_keys=True, default=_plain)


def flatten_record(record: dict) -> dict:
    """Row for CSV output: params spread into q,d,k,h, nested values as JSON"""
    row = {}
    params = record.get("params")
    if isinstance(params, dict):
        for key in PARAM_KEYS:
            row[key] = params.get(key, "")
    for key in sorted(record):
        if key == "params":
            continue
        value = record[key]
        if isinstance(value, (dict, list, tuple)):
            value = json.dumps(value, sort_keys=True, default=_plain)
        elif value is None:
            value = ""
        elif not isinstance(value, (str, int, float, bool)):
            value = _plain(value)
        row[key] = value
    return row


class ReportWriter:
    """Report writer that streams records to a file (or stdout) from a worker thread

    Records are written in the order they were queued; write() blocks while
    the queue is full, so nothing is ever dropped.
    """

    def __init__(self, path: str | None = None, fmt: str = "json", buffer_size: int = WRITER_BUFFER_RECORDS):
        if fmt not in FORMATS:
            raise InvalidParameters(f"unknown report format {fmt!r}, expected one of {FORMATS}")
        self.path = None if path in (None, "-") else Path(path)
        self.fmt = fmt
        self.buffer_size = buffer_size

        self.queue = Queue(maxsize=WRITER_QUEUE_SIZE)
        self.thread = None
        self._stop_event = Event()
        self.buffer = []
        self.stream = None
        self.columns = None
        self.record_count = 0
        self.error = None

    def start(self) -> bool:
        """Open the output and start the writer thread"""
        try:
            if self.path is None:
                self.stream = sys.stdout
            else:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                self.stream = open(self.path, "w", encoding="utf-8", newline="")
        except OSError as e:
            log.error(f"Failed to open report output {self.path}: {e}")
            self.error = e
            return False

        self._stop_event.clear()
        self.record_count = 0
        self.thread = Thread(target=self._writer_thread, daemon=True)
        self.thread.start()
        log.debug(f"Report writer started: {self.path or 'stdout'} ({self.fmt})")
        return True

    def write(self, record: dict) -> bool:
        """Queue one record"""
        if self._stop_event.is_set() or self.thread is None:
            return False
        self.queue.put(record)
        self.record_count += 1
        return True

    def stop(self) -> bool:
        """Drain the queue, flush and close; False if anything failed"""
        self._stop_event.set()

        if self.thread:
            remaining = self.queue.qsize()
            if remaining > 0:
                log.debug(f"Writing {remaining} queued records...")
            self.thread.join(timeout=WRITER_THREAD_TIMEOUT)
            if self.thread.is_alive():
                log.warning("Report writer thread did not finish in time")
                self.error = self.error or TimeoutError("report writer stalled")

        try:
            self._flush_buffer()
        finally:
            if self.stream is not None and self.stream is not sys.stdout:
                self.stream.close()
            elif self.stream is not None:
                self.stream.flush()
            self.stream = None

        log.info(f"Wrote {self.record_count} records to {self.path or 'stdout'}")
        return self.error is None

    def _writer_thread(self):
        while not self._stop_event.is_set() or not self.queue.empty():
            try:
                record = self.queue.get(timeout=QUEUE_GET_TIMEOUT)
            except Empty:
                continue
            try:
                self.buffer.append(self._encode(record))
                if len(self.buffer) >= self.buffer_size:
                    self._flush_buffer()
            except (TypeError, ValueError, OSError) as e:
                log.error(f"Report write error: {e}")
                self.error = self.error or e

    def _encode(self, record: dict) -> str:
        if self.fmt == "json":
            return encode_json(record) + "\n"

        row = flatten_record(record)
        out = io.StringIO()
        if self.columns is None:
            self.columns = list(row)
            csv.writer(out, lineterminator="\n").writerow(self.columns)
        extra = set(row) - set(self.columns)
        if extra:
            log.warning(f"CSV report drops columns missing from the header: {sorted(extra)}")
        writer = csv.DictWriter(out, self.columns, restval="", extrasaction="ignore", lineterminator="\n")
        writer.writerow(row)
        return out.getvalue()

    def _flush_buffer(self):
        """Write buffered lines to the output"""
        if not self.buffer or self.stream is None:
            return
        self.stream.write("".join(self.buffer))
        self.stream.flush()
        log.debug(f"Flushed {len(self.buffer)} records")
        self.buffer = []
