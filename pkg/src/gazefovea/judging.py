"""Pairwise answer-quality evaluation.

Two candidate answers are compared by a judge model twice, once in each
presentation order, and the two outcomes are aggregated into a single
win/tie/loss verdict so position bias cancels. The judge also scores four
dimensions per answer; a fixed weighting folds them into one 0-10 total.
"""

from __future__ import annotations

import enum
import json
import os
import re
import threading
from dataclasses import dataclass
from hashlib import sha256
from importlib import resources
from pathlib import Path
from typing import Protocol

import httpx

from .errors import (
    AllTiesError,
    JudgeUnavailableError,
    MalformedJudgeResponseError,
    OutOfRangeError,
)

RUBRIC_VERSION = "v1"

SCORE_WEIGHTS = {"coverage": 0.40, "accuracy": 0.40, "details": 0.15, "fluency": 0.05}

JUDGE_ENDPOINT_ENV = "GAZEFOVEA_JUDGE_ENDPOINT"
JUDGE_MODEL_ENV = "GAZEFOVEA_JUDGE_MODEL"
JUDGE_API_KEY_ENV = "GAZEFOVEA_JUDGE_API_KEY"


class OrderOutcome(enum.Enum):
    """Result of one judge call, from original answer A's perspective."""

    A_WINS = "a_wins"
    B_WINS = "b_wins"
    TIE = "tie"


class Verdict(enum.Enum):
    WIN = "win"
    TIE = "tie"
    LOSS = "loss"


@dataclass(frozen=True)
class JudgeScores:
    """Four-dimension judge scores, each in [0, 10]."""

    coverage: float
    accuracy: float
    details: float
    fluency: float

    def as_dict(self) -> dict:
        return {
            "coverage": self.coverage,
            "accuracy": self.accuracy,
            "details": self.details,
            "fluency": self.fluency,
        }


@dataclass(frozen=True)
class PairwiseVerdict:
    """Both order outcomes plus the aggregate, from A's perspective."""

    order_ab: OrderOutcome
    order_ba: OrderOutcome
    aggregate: Verdict


@dataclass(frozen=True)
class EvalSummary:
    """Aggregate win/tie/loss counts with the ties-excluded win rate.

    ``win_rate_pct`` and ``mean_total_score`` are None when undefined
    (all ties, or no judged samples).
    """

    wins: int
    ties: int
    losses: int
    win_rate_pct: float | None
    mean_total_score: float | None


def weighted_total(scores: JudgeScores) -> float:
    """0.40*coverage + 0.40*accuracy + 0.15*details + 0.05*fluency."""
    for name, value in scores.as_dict().items():
        if not (0.0 <= value <= 10.0):
            raise OutOfRangeError(f"{name} score {value} outside [0, 10]")
    return (
        SCORE_WEIGHTS["coverage"] * scores.coverage
        + SCORE_WEIGHTS["accuracy"] * scores.accuracy
        + SCORE_WEIGHTS["details"] * scores.details
        + SCORE_WEIGHTS["fluency"] * scores.fluency
    )


_ORDER_SCORE = {OrderOutcome.A_WINS: 1, OrderOutcome.TIE: 0, OrderOutcome.B_WINS: -1}


def aggregate_dual_order(order_ab: OrderOutcome, order_ba: OrderOutcome) -> Verdict:
    """Signed-sum aggregation: conflicting orders cancel to a tie."""
    s = _ORDER_SCORE[order_ab] + _ORDER_SCORE[order_ba]
    if s > 0:
        return Verdict.WIN
    if s < 0:
        return Verdict.LOSS
    return Verdict.TIE


def win_rate(wins: int, ties: int, losses: int) -> float:
    """Percentage of decisive comparisons won: 100 * wins / (wins + losses)."""
    decisive = wins + losses
    if decisive == 0:
        raise AllTiesError("no decisive comparisons; win rate is undefined")
    return 100.0 * wins / decisive


def summarize(verdicts, totals) -> EvalSummary:
    """Fold per-sample verdicts and weighted totals into one summary."""
    verdicts = list(verdicts)
    totals = list(totals)
    if len(verdicts) != len(totals):
        raise ValueError("verdicts and totals must have equal length")
    wins = sum(1 for v in verdicts if v is Verdict.WIN)
    ties = sum(1 for v in verdicts if v is Verdict.TIE)
    losses = sum(1 for v in verdicts if v is Verdict.LOSS)
    try:
        rate = win_rate(wins, ties, losses)
    except AllTiesError:
        rate = None
    mean = sum(totals) / len(totals) if totals else None
    return EvalSummary(
        wins=wins, ties=ties, losses=losses, win_rate_pct=rate, mean_total_score=mean
    )


# --- judge prompt and response grammar --------------------------------------

def _rubric_template() -> str:
    return (
        resources.files("gazefovea")
        .joinpath(f"assets/judge_rubric_{RUBRIC_VERSION}.txt")
        .read_text(encoding="utf-8")
    )


def render_judge_prompt(
    question: str,
    caption: str,
    reference_answer: str,
    answer_a: str,
    answer_b: str,
) -> str:
    """Instantiate the rubric template; identical inputs give identical bytes."""
    return _rubric_template().format(
        question=question,
        caption=caption,
        reference_answer=reference_answer,
        answer_a=answer_a,
        answer_b=answer_b,
    )


_VERDICT_RE = re.compile(r"^VERDICT:\s*(A|B|TIE)\s*$", re.MULTILINE)
_SCORE_RE = re.compile(
    r"^([AB])_(COVERAGE|ACCURACY|DETAILS|FLUENCY):\s*([0-9]+(?:\.[0-9]+)?)\s*$",
    re.MULTILINE,
)

_VERDICT_MAP = {"A": OrderOutcome.A_WINS, "B": OrderOutcome.B_WINS, "TIE": OrderOutcome.TIE}


def parse_judge_response(text: str) -> tuple[OrderOutcome, JudgeScores, JudgeScores]:
    """Parse the structured judge reply.

    Free-text replies are rejected rather than heuristically interpreted;
    the raw payload rides along on the exception for auditing.
    """
    verdicts = _VERDICT_RE.findall(text)
    if len(verdicts) != 1:
        raise MalformedJudgeResponseError(
            f"expected exactly one VERDICT line, found {len(verdicts)}", payload=text
        )
    scores: dict[str, dict[str, float]] = {"A": {}, "B": {}}
    for side, dim, value in _SCORE_RE.findall(text):
        scores[side][dim.lower()] = float(value)
    for side in ("A", "B"):
        missing = set(SCORE_WEIGHTS) - set(scores[side])
        if missing:
            raise MalformedJudgeResponseError(
                f"answer {side} missing score lines: {sorted(missing)}", payload=text
            )
        bad = {d: v for d, v in scores[side].items() if not 0.0 <= v <= 10.0}
        if bad:
            raise MalformedJudgeResponseError(
                f"answer {side} scores outside [0, 10]: {bad}", payload=text
            )
    return (
        _VERDICT_MAP[verdicts[0]],
        JudgeScores(**scores["A"]),
        JudgeScores(**scores["B"]),
    )


# --- judge clients -----------------------------------------------------------

class JudgeClient(Protocol):
    """External judge service: one blocking call, prompt text in, text out.

    Implementations must be safe for concurrent use or serialize internally.
    """

    def submit(self, prompt_text: str) -> str: ...


class HttpJudgeClient:
    """OpenAI-style chat-completions judge, configured via environment.

    Endpoint, model, and API key default to the GAZEFOVEA_JUDGE_* variables;
    transport problems raise JudgeUnavailableError so callers can retry.
    """

    def __init__(
        self,
        endpoint: str | None = None,
        model: str | None = None,
        api_key: str | None = None,
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint or os.environ.get(JUDGE_ENDPOINT_ENV, "")
        self.model = model or os.environ.get(JUDGE_MODEL_ENV, "")
        self.api_key = api_key or os.environ.get(JUDGE_API_KEY_ENV, "")
        if not self.endpoint:
            raise JudgeUnavailableError(
                f"no judge endpoint configured (set {JUDGE_ENDPOINT_ENV})"
            )
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._lock = threading.Lock()

    def submit(self, prompt_text: str) -> str:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        body = {
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt_text}],
        }
        with self._lock:
            try:
                resp = self._client.post(self.endpoint, json=body, headers=headers)
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                raise JudgeUnavailableError(f"judge request failed: {exc}") from exc


_ANSWER_A_RE = re.compile(r"### ANSWER A\n(.*?)\n### END ANSWER A", re.DOTALL)
_ANSWER_B_RE = re.compile(r"### ANSWER B\n(.*?)\n### END ANSWER B", re.DOTALL)


class DeterministicMockJudge:
    """Offline rule-based judge for tests and dry runs.

    Scores each answer from a seeded hash of its text (so runs are
    reproducible and order-independent) and prefers the higher weighted
    total; near-equal totals tie. Identical answers always tie.
    """

    def __init__(self, seed: int = 0, tie_margin: float = 0.05):
        self.seed = seed
        self.tie_margin = tie_margin

    def _scores(self, answer: str) -> JudgeScores:
        dims = {}
        for dim in ("coverage", "accuracy", "details", "fluency"):
            digest = sha256(f"{self.seed}|{dim}|{answer}".encode()).digest()
            dims[dim] = (int.from_bytes(digest[:4], "little") % 101) / 10.0
        return JudgeScores(**dims)

    def submit(self, prompt_text: str) -> str:
        match_a = _ANSWER_A_RE.search(prompt_text)
        match_b = _ANSWER_B_RE.search(prompt_text)
        if not match_a or not match_b:
            raise ValueError("prompt does not contain delimited answers")
        answer_a, answer_b = match_a.group(1), match_b.group(1)
        scores_a = self._scores(answer_a)
        scores_b = self._scores(answer_b)
        total_a, total_b = weighted_total(scores_a), weighted_total(scores_b)
        if abs(total_a - total_b) <= self.tie_margin:
            verdict = "TIE"
        else:
            verdict = "A" if total_a > total_b else "B"
        lines = [f"VERDICT: {verdict}"]
        for side, s in (("A", scores_a), ("B", scores_b)):
            for dim, value in s.as_dict().items():
                lines.append(f"{side}_{dim.upper()}: {value:.1f}")
        return "\n".join(lines)


# --- dual-order judging -------------------------------------------------------

class JudgeAuditLog:
    """Append-only JSONL log of raw judge traffic."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._seq = 0
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        with self._lock:
            row = {"seq": self._seq, **record}
            self._seq += 1
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


_FLIP = {
    OrderOutcome.A_WINS: OrderOutcome.B_WINS,
    OrderOutcome.B_WINS: OrderOutcome.A_WINS,
    OrderOutcome.TIE: OrderOutcome.TIE,
}


def _submit_with_retries(judge: JudgeClient, prompt: str, transport_retries: int) -> str:
    attempts = transport_retries + 1
    for attempt in range(attempts):
        try:
            return judge.submit(prompt)
        except JudgeUnavailableError:
            if attempt == attempts - 1:
                raise
    raise AssertionError("unreachable")


def judge_pair(
    question: str,
    caption: str,
    reference_answer: str,
    answer_a: str,
    answer_b: str,
    judge: JudgeClient,
    *,
    audit_log: JudgeAuditLog | None = None,
    audit_context: dict | None = None,
    transport_retries: int = 2,
    score_mode: str = "ab",
) -> tuple[PairwiseVerdict, JudgeScores, JudgeScores]:
    """Run both presentation orders and aggregate.

    Scores come from the AB-order call by default; ``score_mode="mean"``
    averages both calls instead. Transport failures are retried up to
    ``transport_retries`` times per call; malformed replies are never
    retried (they signal a data-quality problem, not noise).
    """
    if score_mode not in ("ab", "mean"):
        raise ValueError(f"score_mode must be 'ab' or 'mean', got {score_mode!r}")

    prompt_ab = render_judge_prompt(question, caption, reference_answer, answer_a, answer_b)
    prompt_ba = render_judge_prompt(question, caption, reference_answer, answer_b, answer_a)

    reply_ab = _submit_with_retries(judge, prompt_ab, transport_retries)
    if audit_log is not None:
        audit_log.append({**(audit_context or {}), "order": "ab",
                          "prompt": prompt_ab, "response": reply_ab})
    outcome_ab, scores_a, scores_b = parse_judge_response(reply_ab)

    reply_ba = _submit_with_retries(judge, prompt_ba, transport_retries)
    if audit_log is not None:
        audit_log.append({**(audit_context or {}), "order": "ba",
                          "prompt": prompt_ba, "response": reply_ba})
    outcome_ba_raw, scores_b_swapped, scores_a_swapped = parse_judge_response(reply_ba)
    outcome_ba = _FLIP[outcome_ba_raw]  # map back to original A's perspective

    if score_mode == "mean":
        scores_a = JudgeScores(**{
            d: (getattr(scores_a, d) + getattr(scores_a_swapped, d)) / 2.0
            for d in SCORE_WEIGHTS
        })
        scores_b = JudgeScores(**{
            d: (getattr(scores_b, d) + getattr(scores_b_swapped, d)) / 2.0
            for d in SCORE_WEIGHTS
        })

    verdict = PairwiseVerdict(
        order_ab=outcome_ab,
        order_ba=outcome_ba,
        aggregate=aggregate_dual_order(outcome_ab, outcome_ba),
    )
    return verdict, scores_a, scores_b
