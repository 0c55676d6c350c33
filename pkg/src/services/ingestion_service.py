"""Ingestion Service for response, gold and categorical files"""

import io
import json
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import DomainError, DuplicationError, ParseError
from src.core.extensions import CategoricalResponses
from src.core.model import Answer, GoldLabels, ResponseMatrix
from src.utils.logger import setup_logger

logger = setup_logger(__name__)

RESPONSE_COLUMNS = ("task_id", "worker_id", "answer")
GOLD_COLUMNS = ("task_id", "answer")
JSON_KEYS = {"task": "task_id", "worker": "worker_id", "answer": "answer"}

_PANDAS_LINE = re.compile(r"line (\d+)")


class LoadedResponses(BaseModel):
    """A parsed response file with everything that rode along with it"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: ResponseMatrix
    gold: Optional[GoldLabels] = None
    # task -> {column -> value} from extra CSV columns
    task_attributes: Dict[str, Dict[str, str]] = Field(default_factory=dict)


def detect_format(path: str, fmt: Optional[str] = None) -> str:
    if fmt:
        return fmt
    return "json" if Path(path).suffix.lower() == ".json" else "csv"


class IngestionService:
    """Service for reading crowd answers into response matrices"""

    def read_table(self, text: str, fmt: str, required: Tuple[str, ...]) -> pd.DataFrame:
        """Parse CSV or JSON text into a frame of strings with a `line` column"""
        if fmt == "json":
            frame = self._read_json(text)
        elif fmt == "csv":
            frame = self._read_csv(text)
        else:
            raise DomainError(f"Unknown input format: {fmt!r}")

        missing = [c for c in required if c not in frame.columns]
        if missing:
            raise ParseError(f"missing column(s) {missing}", line=1)
        for column in required:
            blank = frame[column].str.strip() == ""
            if blank.any():
                row = frame[blank].iloc[0]
                raise ParseError(f"empty {column}", line=int(row["line"]))
        return frame

    def _read_csv(self, text: str) -> pd.DataFrame:
        try:
            frame = pd.read_csv(
                io.StringIO(text),
                dtype=str,
                keep_default_na=False,
                skipinitialspace=True,
            )
        except pd.errors.EmptyDataError:
            raise ParseError("empty file", line=1)
        except pd.errors.ParserError as e:
            match = _PANDAS_LINE.search(str(e))
            raise ParseError(f"malformed row ({e})", line=int(match.group(1)) if match else None)
        frame.columns = [c.strip() for c in frame.columns]
        # header is line 1
        frame["line"] = range(2, len(frame) + 2)
        return frame

    def _read_json(self, text: str) -> pd.DataFrame:
        try:
            records = json.loads(text)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line=e.lineno)
        if not isinstance(records, list):
            raise ParseError("expected an array of response objects", line=1)
        rows = []
        for position, record in enumerate(records, start=1):
            if not isinstance(record, dict) or any(key not in record for key in ("task", "answer")):
                raise ParseError(f"record {position} is not a response object", line=position)
            row = {JSON_KEYS.get(k, k): str(v) for k, v in record.items()}
            row["line"] = position
            rows.append(row)
        columns = sorted({k for r in rows for k in r}) or ["line"]
        return pd.DataFrame(rows, columns=columns).fillna("")

    def _answers(self, frame: pd.DataFrame) -> List[Answer]:
        answers = []
        for token, line in zip(frame["answer"], frame["line"]):
            try:
                answers.append(Answer.parse(token))
            except DomainError as e:
                raise DomainError(f"line {line}: {e}")
        return answers

    def _check_duplicates(self, frame: pd.DataFrame):
        dup = frame.duplicated(subset=["task_id", "worker_id"], keep="first")
        if dup.any():
            row = frame[dup].iloc[0]
            raise DuplicationError(
                f"line {row['line']}: duplicate response for task {row['task_id']!r} "
                f"and worker {row['worker_id']!r}"
            )

    def _task_attributes(self, frame: pd.DataFrame) -> Dict[str, Dict[str, str]]:
        extra = [c for c in frame.columns if c not in RESPONSE_COLUMNS and c != "line"]
        if not extra:
            return {}
        attributes: Dict[str, Dict[str, str]] = {}
        for _, row in frame.iterrows():
            current = attributes.setdefault(row["task_id"], {})
            for column in extra:
                value = row[column]
                if value == "":
                    continue
                if current.setdefault(column, value) != value:
                    raise ParseError(
                        f"task {row['task_id']!r} has conflicting {column} values",
                        line=int(row["line"]),
                    )
        return attributes

    def parse_responses(self, text: str, fmt: str = "csv", gold_text: Optional[str] = None) -> LoadedResponses:
        frame = self.read_table(text, fmt, RESPONSE_COLUMNS)
        if frame.empty:
            raise ParseError("no responses", line=2)
        self._check_duplicates(frame)
        answers = self._answers(frame)

        tasks = list(dict.fromkeys(frame["task_id"]))
        workers = list(dict.fromkeys(frame["worker_id"]))
        cells = {(t, w): a for t, w, a in zip(frame["task_id"], frame["worker_id"], answers)}
        matrix = ResponseMatrix.from_cells(tasks, workers, cells)

        gold = self.parse_gold(gold_text) if gold_text is not None else None
        if gold is not None:
            gold.check_against(matrix)

        if not matrix.is_complete:
            logger.info(f"Response matrix is incomplete: {len(cells)} of {matrix.n * matrix.m} cells answered")
        return LoadedResponses(matrix=matrix, gold=gold, task_attributes=self._task_attributes(frame))

    def parse_gold(self, text: str, fmt: str = "csv") -> GoldLabels:
        frame = self.read_table(text, fmt, GOLD_COLUMNS)
        dup = frame.duplicated(subset=["task_id"])
        if dup.any():
            row = frame[dup].iloc[0]
            raise DuplicationError(f"line {row['line']}: duplicate gold label for task {row['task_id']!r}")
        return GoldLabels(labels=dict(zip(frame["task_id"], self._answers(frame))))

    def parse_categorical(self, text: str, fmt: str = "csv") -> CategoricalResponses:
        frame = self.read_table(text, fmt, RESPONSE_COLUMNS)
        self._check_duplicates(frame)
        tasks = list(dict.fromkeys(frame["task_id"]))
        workers = list(dict.fromkeys(frame["worker_id"]))
        task_index = {t: i for i, t in enumerate(tasks)}
        worker_index = {w: j for j, w in enumerate(workers)}
        grid: List[List[Optional[str]]] = [[None] * len(workers) for _ in tasks]
        for t, w, label in zip(frame["task_id"], frame["worker_id"], frame["answer"]):
            grid[task_index[t]][worker_index[w]] = label.strip()
        return CategoricalResponses(
            tasks=tuple(tasks),
            workers=tuple(workers),
            labels=tuple(tuple(row) for row in grid),
        )

    def load_responses(self, path: str, fmt: Optional[str] = None, gold_path: Optional[str] = None) -> LoadedResponses:
        """Load a response file and, optionally, its gold labels"""
        logger.info(f"Loading responses from {path}")
        text = self._read_text(path)
        gold_text = self._read_text(gold_path) if gold_path else None
        loaded = self.parse_responses(text, detect_format(path, fmt), gold_text)
        logger.info(f"Loaded {loaded.matrix.n} tasks x {loaded.matrix.m} workers")
        return loaded

    def load_gold(self, path: str) -> GoldLabels:
        return self.parse_gold(self._read_text(path), detect_format(path))

    def load_categorical_responses(self, path: str, fmt: Optional[str] = None) -> CategoricalResponses:
        return self.parse_categorical(self._read_text(path), detect_format(path, fmt))

    def _read_text(self, path: str) -> str:
        try:
            return Path(path).read_text(encoding="utf-8-sig")
        except OSError as e:
            logger.error(f"Cannot read {path}: {e}")
            raise


ingestion_service = IngestionService()
