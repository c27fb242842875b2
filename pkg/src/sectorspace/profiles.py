"""Per-investor, per-year sectoral strategy vectors.

Each round is split equally across the parent tags of its startup: with k
parent tags, every participating investor books 1/k of a round (and 1/k of
the amount) in each tag. An investor participating in a round counts the
round fully in its own tally, independent of co-investors. Amounts ride
along for reporting but are not used by the geometric analyses.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AnalysisError
from .ingest import RawRound, StageClass, ValidatedDataset, classify_stage
from .ontology import SectorOntology

logger = logging.getLogger(__name__)

DEFAULT_YEARS = range(2000, 2018)


@dataclass(frozen=True)
class StrategyVector:
    """Sectoral position of one investor in one year.

    ``sectors`` fixes the dimension order; it is shared by every vector
    built from the same ontology and options.
    """

    sectors: tuple[str, ...]
    rounds_by_sector: np.ndarray
    amount_by_sector: np.ndarray

    def normalized(self) -> np.ndarray:
        """Round counts as shares summing to 1."""
        total = self.rounds_by_sector.sum()
        if total <= 0:
            raise AnalysisError("cannot normalize an all-zero strategy vector")
        return self.rounds_by_sector / total

    @property
    def n_rounds(self) -> float:
        return float(self.rounds_by_sector.sum())


@dataclass(frozen=True)
class InvestorYearProfile:
    investor_id: str
    year: int
    stage_filter: StageClass | None
    vector: StrategyVector


@dataclass(frozen=True)
class ProfileOptions:
    """Knobs for profile construction.

    ``exclude_sectors`` names parent tags removed from the analysis; with
    ``exclude_mode="drop"`` the dimensions disappear (P shrinks), with
    ``"zero"`` they stay but are zeroed. Excluded names absent from the
    ontology are ignored. ``strict_stage`` makes unclassifiable stage
    labels an error instead of leaving the round stage-less.
    """

    exclude_sectors: frozenset[str] = frozenset({"Health Care"})
    exclude_mode: str = "drop"
    stage_filter: StageClass | None = None
    years: range = DEFAULT_YEARS
    strict_stage: bool = False

    def __post_init__(self):
        if self.exclude_mode not in ("drop", "zero"):
            raise AnalysisError(f"unknown exclude_mode {self.exclude_mode!r}")

    def effective_sectors(self, ontology: SectorOntology) -> tuple[str, ...]:
        if self.exclude_mode == "drop":
            return tuple(t for t in ontology.parent_tags if t not in self.exclude_sectors)
        return ontology.parent_tags


@dataclass(frozen=True)
class GroupSpec:
    """Selector for a profile subgroup.

    Exactly one of ``investor_type`` and ``stage`` may be set; neither
    means "all". Type selectors and "all" match only stage-unfiltered
    profiles, so mixed profile lists stay unambiguous.
    """

    investor_type: str | None = None
    stage: StageClass | None = None

    def __post_init__(self):
        if self.investor_type is not None and self.stage is not None:
            raise AnalysisError("GroupSpec selects by type or by stage, not both")

    def label(self) -> str:
        if self.investor_type is not None:
            return f"type:{self.investor_type}"
        if self.stage is not None:
            return f"stage:{self.stage.value}"
        return "all"


def split_round(rnd: RawRound, parents, participation: float = 1.0
                ) -> list[tuple[str, float, float]]:
    """Equal split of one investor's participation in a round.

    Each of the k parent tags receives ``participation / k`` round weight
    and ``participation * amount / k`` amount weight. An empty parent set
    routes the round to the unclassified sink: the caller gets ``[]`` and
    a log record.
    """
    parents = sorted(parents)
    if not parents:
        logger.warning("round %s has no classified sectors; excluded", rnd.round_id)
        return []
    k = len(parents)
    amount = rnd.amount_usd or 0.0
    return [(tag, participation / k, participation * amount / k) for tag in parents]


def build_profiles(dataset: ValidatedDataset, ontology: SectorOntology | None = None,
                   options: ProfileOptions = ProfileOptions()) -> list[InvestorYearProfile]:
    """One profile per (investor, year) with any activity, sorted by id then year.

    Years outside ``options.years`` are skipped, as are rounds whose stage
    does not match ``options.stage_filter`` (when set). Investor-year pairs
    with no surviving activity are simply absent.
    """
    if ontology is None:
        ontology = dataset.ontology
    if len(options.years) == 0:
        raise AnalysisError("empty years range")
    sectors = options.effective_sectors(ontology)
    sector_index = {tag: i for i, tag in enumerate(sectors)}
    zero_excluded = options.exclude_mode == "zero"

    parents_cache: dict[str, frozenset[str]] = {}
    acc: dict[tuple[str, int], tuple[np.ndarray, np.ndarray]] = {}

    for rnd in dataset.rounds:
        year = rnd.announced_date.year
        if year not in options.years:
            continue
        if options.stage_filter is not None:
            stage = classify_stage(rnd.stage_label, strict=options.strict_stage)
            if stage is not options.stage_filter:
                continue
        elif options.strict_stage:
            classify_stage(rnd.stage_label, strict=True)
        parents = parents_cache.get(rnd.startup_id)
        if parents is None:
            startup = dataset.startup_by_id[rnd.startup_id]
            parents, _ = ontology.resolve(startup.tags)
            parents_cache[rnd.startup_id] = parents
        shares = split_round(rnd, parents)
        if not shares:
            continue
        for investor_id in rnd.investor_ids:
            key = (investor_id, year)
            vectors = acc.get(key)
            if vectors is None:
                vectors = (np.zeros(len(sectors)), np.zeros(len(sectors)))
                acc[key] = vectors
            rounds_vec, amount_vec = vectors
            for tag, round_w, amount_w in shares:
                idx = sector_index.get(tag)
                if idx is None:
                    continue  # dropped dimension
                if zero_excluded and tag in options.exclude_sectors:
                    continue
                rounds_vec[idx] += round_w
                amount_vec[idx] += amount_w

    profiles = []
    for (investor_id, year) in sorted(acc):
        rounds_vec, amount_vec = acc[(investor_id, year)]
        if rounds_vec.sum() <= 0:
            continue
        profiles.append(InvestorYearProfile(
            investor_id=investor_id,
            year=year,
            stage_filter=options.stage_filter,
            vector=StrategyVector(sectors, rounds_vec, amount_vec),
        ))
    return profiles


def group_profiles(profiles, spec: GroupSpec,
                   investors: dict | None = None) -> list[InvestorYearProfile]:
    """Subset of ``profiles`` matching a group selector.

    Type selectors need the ``investors`` id -> :class:`RawInvestor`
    mapping (e.g. ``dataset.investor_by_id``) and reject labels no
    investor in the table carries.
    """
    if spec.stage is not None:
        return [p for p in profiles if p.stage_filter is spec.stage]
    unfiltered = [p for p in profiles if p.stage_filter is None]
    if spec.investor_type is None:
        return unfiltered
    if investors is None:
        raise AnalysisError("type-based grouping needs the investor table")
    known = {inv.type_label for inv in investors.values()}
    if spec.investor_type not in known:
        raise AnalysisError(f"no investor has type {spec.investor_type!r}")
    return [
        p for p in unfiltered
        if p.investor_id in investors and investors[p.investor_id].type_label == spec.investor_type
    ]


def profiles_by_year(profiles) -> dict[int, list[InvestorYearProfile]]:
    out: dict[int, list[InvestorYearProfile]] = {}
    for p in profiles:
        out.setdefault(p.year, []).append(p)
    return dict(sorted(out.items()))


def share_matrix(profiles) -> tuple[np.ndarray, list[tuple[str, int]]]:
    """Stack normalized strategy vectors as rows.

    Returns the matrix and the (investor_id, year) row labels in order.
    """
    if not profiles:
        raise AnalysisError("no profiles to stack")
    rows = np.vstack([p.vector.normalized() for p in profiles])
    labels = [(p.investor_id, p.year) for p in profiles]
    return rows, labels


def stage_partition(dataset: ValidatedDataset, ontology: SectorOntology | None = None,
                    options: ProfileOptions = ProfileOptions()
                    ) -> dict[StageClass, list[InvestorYearProfile]]:
    """Profiles rebuilt once per stage bucket, for stage-resolved analyses."""
    return {
        stage: build_profiles(dataset, ontology, replace(options, stage_filter=stage))
        for stage in StageClass
    }
