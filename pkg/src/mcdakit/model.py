"""Domain types, bundled concept metadata, and survey/ranking file ingestion.

Two input files drive the pipeline:

* ``ratings.csv`` with header ``expert_id,concept_id,criterion,score`` holds
  one Likert score (1..10) per expert, concept and criterion.
* ``ranks.csv`` with header
  ``expert_id,expert_rank,criterion,criterion_rank,item_id,item_rank`` holds
  one row per (expert, criterion, item); the per-criterion item ranks of each
  expert must form a complete permutation.

JSON mirrors of both formats carry the same records one-to-one.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateTriple,
    MalformedRow,
    MissingCell,
    NonPermutation,
    ScoreOutOfRange,
    UnknownCriterion,
    UnknownItem,
    ValidationError,
)

SCORE_MIN = 1
SCORE_MAX = 10

RATINGS_HEADER = ("expert_id", "concept_id", "criterion", "score")
RANKS_HEADER = (
    "expert_id",
    "expert_rank",
    "criterion",
    "criterion_rank",
    "item_id",
    "item_rank",
)


@dataclass(frozen=True)
class CriterionId:
    """A rating or evaluation dimension, identified by a short code."""

    code: str
    label: str = ""

    def __post_init__(self):
        if not self.code:
            raise ValidationError("criterion code must be non-empty")
        if not self.label:
            object.__setattr__(self, "label", self.code)


@dataclass(frozen=True)
class Concept:
    """One of the bundled key concepts being grouped and prioritized."""

    id: int
    name: str
    notation: str
    description: str

    def __post_init__(self):
        if self.notation != f"CNCPT{self.id}":
            raise ValidationError(
                f"concept notation {self.notation!r} does not match id {self.id}"
            )


@dataclass(frozen=True)
class SurveyRecord:
    """A single expert score for one concept on one criterion."""

    expert_id: int
    concept_id: int
    criterion: CriterionId
    score: int

    def __post_init__(self):
        if not SCORE_MIN <= self.score <= SCORE_MAX:
            raise ScoreOutOfRange(
                f"score {self.score} outside [{SCORE_MIN}, {SCORE_MAX}] "
                f"(expert {self.expert_id}, concept {self.concept_id}, "
                f"criterion {self.criterion.code})"
            )


# The five rating dimensions used for the grouping stage.
NIST_CRITERIA: tuple[CriterionId, ...] = (
    CriterionId("AS", "Administrative safeguards"),
    CriterionId("PS", "Physical safeguards"),
    CriterionId("TS", "Technical safeguards"),
    CriterionId("OR", "Organizational requirements"),
    CriterionId("PPR", "Policy and procedure requirements"),
)

# The three evaluation dimensions used for the prioritization stage.
EVALUATION_CRITERIA: tuple[CriterionId, ...] = (
    CriterionId("Ease", "Ease of implementation"),
    CriterionId("Efficacy", "Efficacy of implementation"),
    CriterionId("Cost", "Cost of implementation"),
)


class RatingMatrix:
    """Concept-by-criterion matrix of expert-averaged scores.

    Rows are keyed by concept id, columns by criterion. All cells must be
    present and inside the Likert range.
    """

    def __init__(
        self,
        concept_ids: Sequence[int],
        criteria: Sequence[CriterionId],
        values,
    ):
        self.concept_ids = tuple(int(c) for c in concept_ids)
        self.criteria = tuple(criteria)
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != (len(self.concept_ids), len(self.criteria)):
            raise ValidationError(
                f"matrix shape {self.values.shape} does not match "
                f"{len(self.concept_ids)} concepts x {len(self.criteria)} criteria"
            )
        if len(set(self.concept_ids)) != len(self.concept_ids):
            raise ValidationError("duplicate concept ids in matrix rows")
        codes = [c.code for c in self.criteria]
        if len(set(codes)) != len(codes):
            raise ValidationError("duplicate criterion codes in matrix columns")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError("matrix contains non-finite values")
        if self.values.min() < SCORE_MIN or self.values.max() > SCORE_MAX:
            raise ValidationError(
                f"matrix values outside [{SCORE_MIN}, {SCORE_MAX}]"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def column(self, code: str) -> np.ndarray:
        for j, crit in enumerate(self.criteria):
            if crit.code == code:
                return self.values[:, j]
        raise UnknownCriterion(f"no criterion with code {code!r}")

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, RatingMatrix)
            and self.concept_ids == other.concept_ids
            and self.criteria == other.criteria
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True)
class RankProfile:
    """One expert's ordinal input: a criteria ranking plus, per criterion,
    a full ranking of the items under evaluation."""

    expert_id: int
    expert_rank: int = 1
    criterion_ranks: dict[str, int] = field(default_factory=dict)
    item_ranks: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        if self.expert_rank < 1:
            raise NonPermutation(
                f"expert {self.expert_id}: expert_rank must be >= 1"
            )
        ranks = sorted(self.criterion_ranks.values())
        if ranks != list(range(1, len(ranks) + 1)):
            raise NonPermutation(
                f"expert {self.expert_id}: criterion ranks {ranks} are not a "
                f"permutation of 1..{len(ranks)}"
            )
        if set(self.item_ranks) != set(self.criterion_ranks):
            raise NonPermutation(
                f"expert {self.expert_id}: item rankings do not cover the "
                f"ranked criteria"
            )
        universe = None
        for code, ordering in self.item_ranks.items():
            if len(set(ordering)) != len(ordering):
                raise NonPermutation(
                    f"expert {self.expert_id}, criterion {code}: duplicate items"
                )
            if universe is None:
                universe = set(ordering)
            elif set(ordering) != universe:
                raise NonPermutation(
                    f"expert {self.expert_id}, criterion {code}: item set differs "
                    f"from the other criteria"
                )

    @property
    def items(self) -> tuple[str, ...]:
        """Item universe in sorted order."""
        first = next(iter(self.item_ranks.values()), ())
        return tuple(sorted(first))

    def rank_of(self, criterion: str, item: str) -> int:
        """1-based rank of ``item`` under ``criterion``."""
        return self.item_ranks[criterion].index(item) + 1


def _decode(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    elif hasattr(source, "read"):
        raw = source.read()
        if isinstance(raw, str):
            return raw
    else:
        raise ValidationError(f"unsupported source type {type(source).__name__}")
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValidationError(f"input is not valid UTF-8: {exc}") from None


def _int_field(row_no: int, name: str, text: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError):
        raise MalformedRow(row_no, f"field {name!r} is not an integer: {text!r}")


def _criterion_for(code: str, catalog: dict[str, CriterionId] | None,
                   row_no: int) -> CriterionId:
    if not code:
        raise MalformedRow(row_no, "empty criterion code")
    if catalog is None:
        return CriterionId(code)
    if code not in catalog:
        raise UnknownCriterion(
            f"line {row_no}: criterion {code!r} not in the declared set "
            f"{sorted(catalog)}"
        )
    return catalog[code]


def parse_ratings(
    source,
    format: str = "csv",
    criteria: Sequence[CriterionId] | None = None,
) -> list[SurveyRecord]:
    """Parse survey records from CSV or JSON bytes.

    When ``criteria`` is given, codes outside it are rejected; otherwise the
    criterion set is taken from the file.
    """
    text = _decode(source)
    catalog = {c.code: c for c in criteria} if criteria is not None else None
    rows: list[tuple[int, dict[str, str]]] = []
    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file")
        if tuple(h.strip() for h in header) != RATINGS_HEADER:
            raise MalformedRow(1, f"expected header {','.join(RATINGS_HEADER)}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RATINGS_HEADER):
                raise MalformedRow(row_no, f"expected 4 fields, got {len(row)}")
            rows.append((row_no, dict(zip(RATINGS_HEADER, (v.strip() for v in row)))))
    elif format == "json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedRow(exc.lineno, f"invalid JSON: {exc.msg}")
        if not isinstance(payload, list):
            raise MalformedRow(1, "JSON payload must be a list of records")
        for idx, obj in enumerate(payload, start=1):
            if not isinstance(obj, dict) or set(obj) != set(RATINGS_HEADER):
                raise MalformedRow(idx, f"record must have keys {RATINGS_HEADER}")
            rows.append((idx, {k: str(obj[k]) for k in RATINGS_HEADER}))
    else:
        raise ValidationError(f"unknown format {format!r} (use 'csv' or 'json')")

    records: list[SurveyRecord] = []
    seen: set[tuple[int, int, str]] = set()
    for row_no, fields in rows:
        expert = _int_field(row_no, "expert_id", fields["expert_id"])
        concept = _int_field(row_no, "concept_id", fields["concept_id"])
        score = _int_field(row_no, "score", fields["score"])
        criterion = _criterion_for(fields["criterion"], catalog, row_no)
        if expert < 1:
            raise MalformedRow(row_no, f"expert_id must be >= 1, got {expert}")
        key = (expert, concept, criterion.code)
        if key in seen:
            raise DuplicateTriple(
                f"line {row_no}: duplicate (expert {expert}, concept {concept}, "
                f"criterion {criterion.code})"
            )
        seen.add(key)
        records.append(SurveyRecord(expert, concept, criterion, score))
    return records


def aggregate_ratings(
    records: Iterable[SurveyRecord],
    criteria: Sequence[CriterionId] | None = None,
) -> RatingMatrix:
    """Average expert scores into a concept-by-criterion matrix.

    Every (concept, criterion) cell must have at least one record. Rows are
    ordered by concept id; columns follow ``criteria`` when given, otherwise
    criterion codes sorted ascending (so the result does not depend on record
    order).
    """
    records = list(records)
    if not records:
        raise MissingCell([])
    by_code: dict[str, CriterionId] = {}
    cells: dict[tuple[int, str], list[int]] = {}
    for rec in records:
        by_code.setdefault(rec.criterion.code, rec.criterion)
        cells.setdefault((rec.concept_id, rec.criterion.code), []).append(rec.score)

    concept_ids = sorted({rec.concept_id for rec in records})
    if criteria is not None:
        cols = list(criteria)
        extra = set(by_code) - {c.code for c in cols}
        if extra:
            raise UnknownCriterion(
                f"records contain criteria outside the declared set: {sorted(extra)}"
            )
    else:
        cols = [by_code[code] for code in sorted(by_code)]

    missing = [
        (cid, crit.code)
        for cid in concept_ids
        for crit in cols
        if (cid, crit.code) not in cells
    ]
    if missing:
        raise MissingCell(missing)

    values = np.empty((len(concept_ids), len(cols)))
    for i, cid in enumerate(concept_ids):
        for j, crit in enumerate(cols):
            scores = cells[(cid, crit.code)]
            values[i, j] = sum(scores) / len(scores)
    return RatingMatrix(concept_ids, cols, values)


def parse_ranks(
    source,
    format: str = "csv",
    criteria: Sequence[CriterionId] | None = None,
    items: Sequence[str] | None = None,
) -> list[RankProfile]:
    """Parse per-expert rank profiles from CSV or JSON bytes.

    Each expert must rank every criterion exactly once (a permutation of
    1..n) and, under each criterion, every item exactly once. The expert_rank
    field may be left blank; it then defaults to 1 (all experts weighted
    equally). Declared ``criteria``/``items`` restrict the allowed codes.
    """
    text = _decode(source)
    rows: list[tuple[int, dict[str, str]]] = []
    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedRow(1, "empty file")
        if tuple(h.strip() for h in header) != RANKS_HEADER:
            raise MalformedRow(1, f"expected header {','.join(RANKS_HEADER)}")
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(RANKS_HEADER):
                raise MalformedRow(row_no, f"expected 6 fields, got {len(row)}")
            rows.append((row_no, dict(zip(RANKS_HEADER, (v.strip() for v in row)))))
    elif format == "json":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedRow(exc.lineno, f"invalid JSON: {exc.msg}")
        if not isinstance(payload, list):
            raise MalformedRow(1, "JSON payload must be a list of records")
        for idx, obj in enumerate(payload, start=1):
            if not isinstance(obj, dict) or set(obj) != set(RANKS_HEADER):
                raise MalformedRow(idx, f"record must have keys {RANKS_HEADER}")
            rows.append(
                (idx, {k: "" if obj[k] is None else str(obj[k]) for k in RANKS_HEADER})
            )
    else:
        raise ValidationError(f"unknown format {format!r} (use 'csv' or 'json')")

    if not rows:
        raise ValidationError("rank input contains no records")

    allowed_criteria = (
        {c.code for c in criteria} if criteria is not None else None
    )
    allowed_items = set(items) if items is not None else None

    expert_rank: dict[int, int] = {}
    crit_rank: dict[int, dict[str, int]] = {}
    item_rank: dict[int, dict[str, dict[str, int]]] = {}
    item_universe: set[str] = set()

    for row_no, fields in rows:
        expert = _int_field(row_no, "expert_id", fields["expert_id"])
        if expert < 1:
            raise MalformedRow(row_no, f"expert_id must be >= 1, got {expert}")
        e_rank = 1 if fields["expert_rank"] == "" else _int_field(
            row_no, "expert_rank", fields["expert_rank"]
        )
        code = fields["criterion"]
        if not code:
            raise MalformedRow(row_no, "empty criterion code")
        if allowed_criteria is not None and code not in allowed_criteria:
            raise UnknownCriterion(
                f"line {row_no}: criterion {code!r} not in the declared set "
                f"{sorted(allowed_criteria)}"
            )
        c_rank = _int_field(row_no, "criterion_rank", fields["criterion_rank"])
        item = fields["item_id"]
        if not item:
            raise MalformedRow(row_no, "empty item_id")
        if allowed_items is not None and item not in allowed_items:
            raise UnknownItem(
                f"line {row_no}: item {item!r} not in the declared set "
                f"{sorted(allowed_items)}"
            )
        i_rank = _int_field(row_no, "item_rank", fields["item_rank"])

        if expert in expert_rank and expert_rank[expert] != e_rank:
            raise MalformedRow(
                row_no, f"conflicting expert_rank for expert {expert}"
            )
        expert_rank[expert] = e_rank
        per_crit = crit_rank.setdefault(expert, {})
        if code in per_crit and per_crit[code] != c_rank:
            raise MalformedRow(
                row_no,
                f"conflicting criterion_rank for expert {expert}, criterion {code}",
            )
        per_crit[code] = c_rank
        block = item_rank.setdefault(expert, {}).setdefault(code, {})
        if item in block:
            raise NonPermutation(
                f"line {row_no}: duplicate item {item!r} for expert {expert}, "
                f"criterion {code}"
            )
        block[item] = i_rank
        item_universe.add(item)

    if allowed_items is not None:
        missing_items = allowed_items - item_universe
        if missing_items:
            raise NonPermutation(
                f"declared items never ranked: {sorted(missing_items)}"
            )
        item_universe = set(allowed_items)

    profiles: list[RankProfile] = []
    for expert in sorted(expert_rank):
        orderings: dict[str, tuple[str, ...]] = {}
        for code, block in item_rank[expert].items():
            if set(block) != item_universe:
                raise NonPermutation(
                    f"expert {expert}, criterion {code}: ranked items "
                    f"{sorted(block)} do not cover {sorted(item_universe)}"
                )
            ranks = sorted(block.values())
            if ranks != list(range(1, len(block) + 1)):
                raise NonPermutation(
                    f"expert {expert}, criterion {code}: item ranks {ranks} are "
                    f"not a permutation of 1..{len(block)}"
                )
            ordered = sorted(block, key=block.get)
            orderings[code] = tuple(ordered)
        profiles.append(
            RankProfile(
                expert_id=expert,
                expert_rank=expert_rank[expert],
                criterion_ranks=dict(crit_rank[expert]),
                item_ranks=orderings,
            )
        )

    first = profiles[0]
    for prof in profiles[1:]:
        if set(prof.criterion_ranks) != set(first.criterion_ranks):
            raise NonPermutation(
                f"expert {prof.expert_id} ranks a different criteria set than "
                f"expert {first.expert_id}"
            )
    return profiles


def serialize_ratings(records: Iterable[SurveyRecord], format: str = "csv") -> bytes:
    """Inverse of :func:`parse_ratings` for valid datasets."""
    records = list(records)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(RATINGS_HEADER)
        for rec in records:
            writer.writerow(
                [rec.expert_id, rec.concept_id, rec.criterion.code, rec.score]
            )
        return buf.getvalue().encode("utf-8")
    if format == "json":
        payload = [
            {
                "expert_id": rec.expert_id,
                "concept_id": rec.concept_id,
                "criterion": rec.criterion.code,
                "score": rec.score,
            }
            for rec in records
        ]
        return json.dumps(payload, indent=2).encode("utf-8")
    raise ValidationError(f"unknown format {format!r} (use 'csv' or 'json')")


def serialize_ranks(profiles: Iterable[RankProfile], format: str = "csv") -> bytes:
    """Inverse of :func:`parse_ranks` for valid datasets."""
    rows = []
    for prof in sorted(profiles, key=lambda p: p.expert_id):
        for code in prof.criterion_ranks:
            for pos, item in enumerate(prof.item_ranks[code], start=1):
                rows.append(
                    (
                        prof.expert_id,
                        prof.expert_rank,
                        code,
                        prof.criterion_ranks[code],
                        item,
                        pos,
                    )
                )
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(RANKS_HEADER)
        writer.writerows(rows)
        return buf.getvalue().encode("utf-8")
    if format == "json":
        payload = [dict(zip(RANKS_HEADER, row)) for row in rows]
        return json.dumps(payload, indent=2).encode("utf-8")
    raise ValidationError(f"unknown format {format!r} (use 'csv' or 'json')")


def load_concepts() -> tuple[Concept, ...]:
    """Load the bundled concept metadata.

    Ids are validated to be unique and contiguous from 1.
    """
    raw = resources.files("mcdakit").joinpath("data/concepts.json").read_text("utf-8")
    entries = json.loads(raw)
    concepts = tuple(
        Concept(
            id=int(e["id"]),
            name=e["name"],
            notation=e["notation"],
            description=e["description"],
        )
        for e in entries
    )
    ids = [c.id for c in concepts]
    if ids != list(range(1, len(ids) + 1)):
        raise ValidationError("bundled concept ids are not contiguous from 1")
    return concepts


def bundled_data(name: str) -> bytes:
    """Read a file bundled under ``mcdakit/data`` (e.g. ``ratings.csv``)."""
    return resources.files("mcdakit").joinpath(f"data/{name}").read_bytes()
