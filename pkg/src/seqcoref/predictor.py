"""Predictors: anything that maps an input string to an output string.

The runner only ever sees :meth:`Predictor.predict`.  Implementations:

* :class:`OraclePredictor` answers with the oracle target for the live state.
* :class:`ReplayPredictor` answers from a recorded trace file.
* :class:`SubprocessPredictor` talks JSON lines over a child process's stdio.
* :class:`HttpPredictor` posts JSON to a model server.

The request/response record is shared by all transports and by trace files::

    {"input": "...", "max_tokens": 384}          request
    {"output": "...", "score": null}             response
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import queue
import subprocess
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Mapping, Optional, Protocol, Sequence, Union

from .codec import OUTPUT_BUDGET, encode_actions
from .document import Clustering
from .oracle import OracleError, oracle_actions
from .transitions import State, SystemKind

log = logging.getLogger(__name__)

ENDPOINT_ENV = "SEQCOREF_PREDICTOR_ENDPOINT"
TIMEOUT_ENV = "SEQCOREF_PREDICTOR_TIMEOUT"


class PredictorError(RuntimeError):
    """The predictor could not produce an output for a request."""


@dataclass(frozen=True)
class PredictRequest:
    input: str
    max_output_tokens: int = OUTPUT_BUDGET
    doc_key: str = ""
    sentence: int = 0
    # live state, for predictors that need more than the text (the oracle)
    state: Optional[State] = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.input:
            raise ValueError("empty predictor input")

    def record(self) -> dict:
        return {"input": self.input, "max_tokens": self.max_output_tokens}

    @property
    def where(self) -> str:
        return f"{self.doc_key} sentence {self.sentence}"


class Predictor(Protocol):
    def predict(self, req: PredictRequest) -> str: ...


def input_hash(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class OraclePredictor:
    """Answers every request with the gold oracle's target string."""

    def __init__(self, gold: Mapping[str, Clustering], system: SystemKind):
        self.gold = gold
        self.system = system

    def predict(self, req: PredictRequest) -> str:
        if req.state is None:
            raise PredictorError(f"{req.where}: oracle predictor needs the live state")
        try:
            gold = self.gold[req.doc_key]
        except KeyError:
            raise PredictorError(f"{req.where}: no gold clustering for document") from None
        try:
            return encode_actions(oracle_actions(self.system, req.state, gold), req.state)
        except OracleError as exc:
            raise PredictorError(f"{req.where}: {exc}") from exc


class ReplayPredictor:
    """Looks answers up in a trace written by :class:`RecordingPredictor`."""

    def __init__(self, path: Union[str, Path], options_hash: Optional[str] = None):
        self.outputs: dict[str, str] = {}
        with open(path, encoding="utf-8") as f:
            for n, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                rec = json.loads(line)
                if options_hash is not None and rec.get("options_hash") != options_hash:
                    raise PredictorError(
                        f"{path}:{n}: trace recorded with options {rec.get('options_hash')}, "
                        f"current options are {options_hash}"
                    )
                self.outputs[input_hash(rec["input"])] = rec["output"]

    def predict(self, req: PredictRequest) -> str:
        try:
            return self.outputs[input_hash(req.input)]
        except KeyError:
            raise PredictorError(f"{req.where}: input not found in replay trace") from None


class RecordingPredictor:
    """Wraps a predictor and appends every exchange to a trace file."""

    def __init__(self, inner: Predictor, sink: IO[str], options_hash: str = ""):
        self.inner = inner
        self.sink = sink
        self.options_hash = options_hash
        self._lock = threading.Lock()

    def predict(self, req: PredictRequest) -> str:
        output = self.inner.predict(req)
        rec = {
            **req.record(),
            "output": output,
            "options_hash": self.options_hash,
            "doc_key": req.doc_key,
            "sentence": req.sentence,
        }
        with self._lock:
            self.sink.write(json.dumps(rec, ensure_ascii=False) + "\n")
            self.sink.flush()
        return output


def _with_retries(fn, req: PredictRequest, retries: int, backoff: float, what: str):
    delay = backoff
    for attempt in range(retries + 1):
        try:
            return fn()
        except (OSError, TimeoutError, PredictorError, ValueError) as exc:
            if attempt == retries:
                raise PredictorError(f"{req.where}: {what} failed after {attempt + 1} attempt(s): {exc}") from exc
            log.warning("%s: %s failed (%s), retrying in %.2fs", req.where, what, exc, delay)
            time.sleep(delay)
            delay *= 2


def _output_of(payload: str) -> str:
    rec = json.loads(payload)
    if not isinstance(rec, dict) or not isinstance(rec.get("output"), str):
        raise ValueError(f"response record has no string 'output': {payload[:80]!r}")
    return rec["output"]


class SubprocessPredictor:
    """One long-lived child process speaking JSON lines on stdin/stdout."""

    def __init__(self, command: Sequence[str], timeout: float = 60.0, retries: int = 0, backoff: float = 0.5):
        if timeout <= 0 or retries < 0:
            raise ValueError("timeout must be positive and retries non-negative")
        self.command = list(command)
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._proc: Optional[subprocess.Popen] = None
        self._lines: "queue.Queue[Optional[str]]" = queue.Queue()
        self._lock = threading.Lock()

    def _start(self) -> subprocess.Popen:
        proc = subprocess.Popen(
            self.command,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines = queue.Queue()
        lines = self._lines

        def pump() -> None:
            assert proc.stdout is not None
            for line in proc.stdout:
                lines.put(line)
            lines.put(None)

        threading.Thread(target=pump, daemon=True).start()
        return proc

    def _exchange(self, req: PredictRequest) -> str:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = self._start()
        assert self._proc.stdin is not None
        try:
            self._proc.stdin.write(json.dumps(req.record(), ensure_ascii=False) + "\n")
            self._proc.stdin.flush()
            line = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            self.close()
            raise TimeoutError(f"no response within {self.timeout}s") from None
        except OSError:
            self.close()
            raise
        if line is None:
            self.close()
            raise PredictorError("predictor process exited")
        return _output_of(line)

    def predict(self, req: PredictRequest) -> str:
        with self._lock:
            return _with_retries(lambda: self._exchange(req), req, self.retries, self.backoff, "subprocess predictor")

    def close(self) -> None:
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if proc.stdin:
                proc.stdin.close()
            proc.wait(timeout=2)
        except (OSError, subprocess.TimeoutExpired):
            proc.kill()
            proc.wait()

    def __enter__(self) -> "SubprocessPredictor":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class HttpPredictor:
    """POSTs ``{"input", "max_tokens"}`` and reads ``{"output"}``."""

    def __init__(self, endpoint: str, timeout: float = 60.0, retries: int = 2, backoff: float = 0.5):
        if timeout <= 0 or retries < 0:
            raise ValueError("timeout must be positive and retries non-negative")
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff

    def _post(self, req: PredictRequest) -> str:
        body = json.dumps(req.record(), ensure_ascii=False).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}, method="POST"
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                return _output_of(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            raise PredictorError(f"HTTP {exc.code} from {self.endpoint}") from exc

    def predict(self, req: PredictRequest) -> str:
        return _with_retries(lambda: self._post(req), req, self.retries, self.backoff, "HTTP predictor")


@dataclass(frozen=True)
class PredictorConfig:
    kind: str = "oracle"  # oracle | replay | subprocess | http
    endpoint: Optional[str] = None
    command: tuple[str, ...] = ()
    trace: Optional[str] = None
    timeout: float = 60.0
    retries: int = 0
    backoff: float = 0.5
    batch_size: int = 1
    concurrency: int = 1

    def __post_init__(self) -> None:
        if self.kind not in ("oracle", "replay", "subprocess", "http"):
            raise ValueError(f"unknown predictor kind {self.kind!r}")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.retries < 0:
            raise ValueError("retries must be non-negative")

    @classmethod
    def from_env(cls, **kwargs) -> "PredictorConfig":
        """Apply the endpoint/timeout environment overrides on top of ``kwargs``."""
        if os.environ.get(ENDPOINT_ENV):
            kwargs["endpoint"] = os.environ[ENDPOINT_ENV]
        if os.environ.get(TIMEOUT_ENV):
            kwargs["timeout"] = float(os.environ[TIMEOUT_ENV])
        return cls(**kwargs)


def make_predictor(
    config: PredictorConfig,
    system: SystemKind,
    gold: Optional[Mapping[str, Clustering]] = None,
    options_hash: Optional[str] = None,
) -> Predictor:
    if config.kind == "oracle":
        if gold is None:
            raise ValueError("the oracle predictor needs gold clusterings")
        return OraclePredictor(gold, system)
    if config.kind == "replay":
        if not config.trace:
            raise ValueError("the replay predictor needs a trace file")
        return ReplayPredictor(config.trace, options_hash)
    if config.kind == "subprocess":
        if not config.command:
            raise ValueError("the subprocess predictor needs a command")
        return SubprocessPredictor(config.command, config.timeout, config.retries, config.backoff)
    if not config.endpoint:
        raise ValueError("the HTTP predictor needs an endpoint")
    return HttpPredictor(config.endpoint, config.timeout, config.retries, config.backoff)
