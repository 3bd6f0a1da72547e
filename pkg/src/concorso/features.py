"""Per-applicant regressors and eligibility filters for competition outcomes.

For every eligible applicant of a competition the extractor produces the
outcome flag plus the connection and similarity signals used by the bias
audit and the outcome regression: productivity percentile, a surname match
against full professors of the hiring university, career-year co-location
with the committee president and with the other members, coauthorship with
the president and members inside the collaboration window, and gender
matches with the president and the committee majority.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Competition, Corpus, Gender, Rank, Researcher
from .errors import ConfigError, MissingScore
from .scoring import ScoreTable
from .stats import DesignMatrix

MIN_CAREER_YEARS = 3  # applicants hired more recently are excluded


@dataclass
class ApplicantFeatures:
    competition_id: str
    researcher_id: str
    won: int                      # E
    female: int                   # G
    merit_pct: float              # FSS, 0-100 percentile
    surname_match: int            # NE
    years_with_president: int     # CP
    years_with_members: int       # CE
    president_coauth_share: float  # PP, 0-100
    coauthoring_members: int      # PE
    same_gender_president: int    # SP
    same_gender_majority: int     # SE
    merit_raw: float = 0.0        # raw score behind merit_pct, for median tests


EXPORT_COLUMNS = ["competition_id", "researcher_id",
                  "E", "G", "FSS", "NE", "CP", "CE", "PP", "PE", "SP", "SE"]


def normalize_family_name(name: str) -> str:
    return " ".join(name.split()).casefold()


@dataclass
class EligibilityResult:
    eligible: dict[str, list[str]]      # competition id → eligible applicant ids
    retained_competitions: list[str]    # audit set: >=1 winner and >=1 non-winner


def _is_eligible(corpus: Corpus, comp: Competition, applicant_id: str) -> bool:
    researcher = corpus.researchers.get(applicant_id)
    if researcher is None or researcher.rank is not Rank.ASSISTANT:
        return False
    return comp.year - researcher.career_start_year >= MIN_CAREER_YEARS


def filter_eligible(corpus: Corpus) -> EligibilityResult:
    """Keep incumbent assistant professors with enough seniority.

    A competition stays in the audit set only when the eligible applicants
    still include at least one winner and one non-winner; competitions that
    fail this carry no within-competition comparison.
    """
    eligible: dict[str, list[str]] = {}
    retained: list[str] = []
    for comp_id in sorted(corpus.competitions):
        comp = corpus.competitions[comp_id]
        kept = [a for a in comp.applicants if _is_eligible(corpus, comp, a)]
        eligible[comp_id] = kept
        winner_set = set(comp.winners)
        n_winners = sum(1 for a in kept if a in winner_set)
        if n_winners >= 1 and len(kept) - n_winners >= 1:
            retained.append(comp_id)
    return EligibilityResult(eligible=eligible, retained_competitions=retained)


def _overlap_years(a: Researcher, b: Researcher,
                   window: tuple[int, int], match_sds: bool) -> int:
    count = 0
    for year in range(window[0], window[1] + 1):
        fa = a.affiliation_in(year)
        fb = b.affiliation_in(year)
        if fa is None or fb is None or fa[0] != fb[0]:
            continue
        if match_sds and fa[1] != fb[1]:
            continue
        count += 1
    return count


def _window_pub_ids(corpus: Corpus, researcher_id: str,
                    window: tuple[int, int]) -> set[str]:
    return {p.id for p in corpus.publications_by_author(researcher_id)
            if window[0] <= p.year <= window[1]}


def _full_professor_names(corpus: Corpus, university: str, year: int) -> set[str]:
    names = set()
    for researcher in corpus.researchers.values():
        if researcher.rank is not Rank.FULL:
            continue
        affiliation = researcher.affiliation_in(year)
        if affiliation is not None and affiliation[0] == university:
            names.add(normalize_family_name(researcher.family_name))
    return names


def extract_features(
    comp: Competition,
    corpus: Corpus,
    scores: ScoreTable,
    window: tuple[int, int] | None = None,
    eligible: list[str] | None = None,
    match_sds: bool = True,
    _name_cache: dict | None = None,
) -> list[ApplicantFeatures]:
    """Feature rows for one competition's eligible applicants, sorted by id."""
    if window is None:
        window = corpus.collaboration_window
    if eligible is None:
        eligible = [a for a in comp.applicants if _is_eligible(corpus, comp, a)]

    cache_key = (comp.university_id, comp.year)
    if _name_cache is not None and cache_key in _name_cache:
        local_names = _name_cache[cache_key]
    else:
        local_names = _full_professor_names(corpus, comp.university_id, comp.year)
        if _name_cache is not None:
            _name_cache[cache_key] = local_names

    president = corpus.researchers[comp.president]
    members = [corpus.researchers[m] for m in comp.members]
    president_pubs = _window_pub_ids(corpus, comp.president, window)
    member_pubs = [_window_pub_ids(corpus, m.id, window) for m in members]
    committee_genders = [president.gender] + [m.gender for m in members]
    winner_set = set(comp.winners)

    rows = []
    for rid in sorted(set(eligible)):
        applicant = corpus.researchers[rid]
        percentile = scores.percentile_of(rid)
        if percentile is None:
            raise MissingScore(f"applicant {rid} has no productivity score")
        applicant_pubs = _window_pub_ids(corpus, rid, window)

        cp = _overlap_years(applicant, president, window, match_sds)
        ce = sum(_overlap_years(applicant, m, window, match_sds) for m in members)
        if president_pubs:
            pp = 100.0 * len(president_pubs & applicant_pubs) / len(president_pubs)
        else:
            pp = 0.0
        pe = sum(1 for pubs in member_pubs if pubs & applicant_pubs)
        same_gender = sum(1 for g in committee_genders if g == applicant.gender)

        rows.append(ApplicantFeatures(
            competition_id=comp.id,
            researcher_id=rid,
            won=1 if rid in winner_set else 0,
            female=1 if applicant.gender is Gender.FEMALE else 0,
            merit_pct=percentile,
            surname_match=1 if normalize_family_name(applicant.family_name)
            in local_names else 0,
            years_with_president=cp,
            years_with_members=ce,
            president_coauth_share=pp,
            coauthoring_members=pe,
            same_gender_president=1 if applicant.gender == president.gender else 0,
            same_gender_majority=1 if same_gender >= 3 else 0,
            merit_raw=scores.fss_of(rid),
        ))
    return rows


def extract_all(
    corpus: Corpus,
    scores: ScoreTable,
    window: tuple[int, int] | None = None,
    match_sds: bool = True,
    eligibility: EligibilityResult | None = None,
) -> list[ApplicantFeatures]:
    """Features for every competition's eligible applicants, in fixed order."""
    if eligibility is None:
        eligibility = filter_eligible(corpus)
    name_cache: dict = {}
    rows = []
    for comp_id in sorted(corpus.competitions):
        comp = corpus.competitions[comp_id]
        rows.extend(extract_features(
            comp, corpus, scores, window,
            eligible=eligibility.eligible[comp_id],
            match_sds=match_sds, _name_cache=name_cache))
    return rows


FEATURE_ORDER = ["G", "FSS", "NE", "CP", "CE", "PP", "PE", "SP", "SE"]
_FEATURE_ATTR = {
    "G": "female",
    "FSS": "merit_pct",
    "NE": "surname_match",
    "CP": "years_with_president",
    "CE": "years_with_members",
    "PP": "president_coauth_share",
    "PE": "coauthoring_members",
    "SP": "same_gender_president",
    "SE": "same_gender_majority",
}


def build_design(rows, base_columns=None, interactions: bool = True) -> DesignMatrix:
    """Regression design from feature rows: intercept, base regressors, and
    (optionally) the interaction of each non-gender regressor with gender.
    Rows cluster by competition.
    """
    if base_columns is None:
        base_columns = FEATURE_ORDER
    unknown = [c for c in base_columns if c not in _FEATURE_ATTR]
    if unknown:
        raise ConfigError(f"unknown design columns: {unknown}")
    if interactions and "G" not in base_columns:
        raise ConfigError("interactions require the gender column")
    n = len(rows)
    values = {c: np.array([getattr(r, _FEATURE_ATTR[c]) for r in rows], dtype=float)
              for c in base_columns}
    names = ["const"]
    columns = [np.ones(n)]
    if interactions:
        g = values["G"]
        names.append("G")
        columns.append(g)
        for c in base_columns:
            if c == "G":
                continue
            names.extend([c, f"G*{c}"])
            columns.extend([values[c], g * values[c]])
    else:
        for c in base_columns:
            names.append(c)
            columns.append(values[c])
    return DesignMatrix(
        X=np.column_stack(columns) if n else np.empty((0, len(names))),
        y=np.array([r.won for r in rows], dtype=float),
        clusters=np.array([r.competition_id for r in rows]),
        columns=names,
    )


def write_features(rows, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(EXPORT_COLUMNS)
        for r in rows:
            writer.writerow([
                r.competition_id, r.researcher_id, r.won, r.female,
                repr(r.merit_pct), r.surname_match, r.years_with_president,
                r.years_with_members, repr(r.president_coauth_share),
                r.coauthoring_members, r.same_gender_president,
                r.same_gender_majority,
            ])
