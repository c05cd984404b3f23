"""Few-shot prompt construction and response parsing for the reasoning stage.

The reasoning backend is asked for three labeled fields per question:

  Answer:         a short, attribute-rich description of the target object
  Reasoning:      two steps - why the object satisfies the question, and
                  why the chosen frame shows it best
  Trigger_moment: the single 0-indexed frame (in the subsampled sequence
                  the backend was shown) where the object is most visible

Model output drifts in formatting, so parsing is label-based line
scanning: case-insensitive field labels, tolerant of surrounding prose,
markdown emphasis and code fences.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

# Answers naming text-bearing objects get flagged so downstream consumers
# know the description refers to a physical medium, not spelled content.
DEFAULT_OCR_LEXICON = frozenset(
    {"letter", "letters", "text", "word", "words", "character", "characters"}
)


@dataclass(frozen=True)
class FewShotExemplar:
    question: str
    answer: str
    reasoning: str
    trigger_moment: int


DEFAULT_EXEMPLARS: tuple[FewShotExemplar, ...] = (
    FewShotExemplar(
        question="Track the slanted object on which the person launches or places another object.",
        answer="the tilted blue book",
        reasoning=(
            "Step 1: The person repeatedly places a small toy on a book that leans "
            "against the shelf, so the slanted object used as a platform is the "
            "tilted blue book. Step 2: At frame 25 the camera has pulled back and "
            "the entire book is clearly in view, in focus and unobstructed by the "
            "person's hand."
        ),
        trigger_moment=25,
    ),
    FewShotExemplar(
        question="Track the letters that the person interacts with.",
        answer="the magnetic plastic letters",
        reasoning=(
            "Step 1: The person slides colored plastic letters across the fridge "
            "door, so the interacted objects are the magnetic plastic letters, "
            "described by their medium rather than their spelling. Step 2: At "
            "frame 48 all three letters are stationary and clearly visible "
            "together, with no hand covering them."
        ),
        trigger_moment=48,
    ),
    FewShotExemplar(
        question="Track the object that occludes the ball.",
        answer="the blue cup on the right",
        reasoning=(
            "Step 1: Three identical cups are shuffled over the ball and the one "
            "that ends up covering it is the cup on the right, so position "
            "disambiguates it. Step 2: At frame 16 the shuffling has stopped and "
            "the right cup sits still, fully visible and well lit."
        ),
        trigger_moment=16,
    ),
)

_SYSTEM_PREAMBLE = (
    "You are an AI assistant specializing in grounded video question-answering. "
    "Given a video and a question, identify the object the question asks about, "
    "explain your reasoning, and pick the one frame where that object can be "
    "localized most reliably."
)

_KEY_REQUIREMENTS = """Key Requirements:
- Answer: a concise noun phrase that must include visual attributes such as
  color, material or physical state. Use positional descriptions to tell
  similar objects apart (for example "the cup on the left"). For text
  objects, describe the physical medium (for example "the magnetic plastic
  letters"), never the spelled content.
- Reasoning: Two-step structure. First explain how the object satisfies the
  question; then justify why the selected frame provides optimal visibility.
- Trigger_moment: Single 0-indexed frame where the target is most clearly
  and fully visible, considering focus, lighting and occlusion."""


@dataclass(frozen=True)
class CortexPrompt:
    """Rendered-on-demand prompt: preamble, requirements, few-shots, question."""

    system_preamble: str
    key_requirements: str
    few_shots: tuple[FewShotExemplar, ...]
    question: str

    def render(self) -> str:
        parts = [self.system_preamble, "", self.key_requirements]
        if self.few_shots:
            parts.append("")
            parts.append("Few-Shot Examples:")
            for ex in self.few_shots:
                parts.append("")
                parts.append(f"Question: {ex.question}")
                parts.append(render_exemplar_response(ex))
        parts += ["", f"Question: {self.question}", "Respond with the three fields only."]
        return "\n".join(parts)


def render_exemplar_response(ex: FewShotExemplar) -> str:
    """Format an exemplar exactly as a backend is expected to answer."""
    return (
        f"Answer: {ex.answer}\n"
        f"Reasoning: {ex.reasoning}\n"
        f"Trigger_moment: {ex.trigger_moment}"
    )


def build_cortex_prompt(
    question: str, exemplars: Sequence[FewShotExemplar] = DEFAULT_EXEMPLARS
) -> CortexPrompt:
    """Assemble the prompt for one question.

    An empty exemplar tuple is allowed (used by prompt ablations); the
    requirement blocks are always present.
    """
    if not question:
        raise ValueError("question must be non-empty")
    return CortexPrompt(
        system_preamble=_SYSTEM_PREAMBLE,
        key_requirements=_KEY_REQUIREMENTS,
        few_shots=tuple(exemplars),
        question=question,
    )


@dataclass(frozen=True)
class ParsedCortexResponse:
    answer: str
    reasoning: str
    trigger_moment: int
    is_ocr_case: bool = False

    def __post_init__(self) -> None:
        if not self.answer or not self.reasoning:
            raise ValueError("answer and reasoning must be non-empty")
        if self.trigger_moment < 0:
            raise ValueError("trigger_moment must be >= 0")

    @property
    def answer_items(self) -> tuple[str, ...]:
        """Experimental multi-object form: semicolon-separated descriptions."""
        return tuple(s.strip() for s in self.answer.split(";") if s.strip())


class ReasonerBackend(Protocol):
    """Produces raw response text for a prompt over a subsampled video.

    Deterministic backends must return identical text for identical inputs.
    """

    def reason(self, video_ref: str, sampled_indices: Sequence[int], prompt: str) -> str: ...


_FIELD_RE = re.compile(
    r"^[\s>*#\-`]*\**\s*(answer|reasoning|trigger[\s_]?moment)\s*\**\s*[:=]\s*(.*)$",
    re.IGNORECASE,
)
_INT_RE = re.compile(r"[+-]?\d+")


def _strip_fences(raw: str) -> str:
    lines = [l for l in raw.splitlines() if not l.strip().startswith("```")]
    return "\n".join(lines)


def parse_cortex_response(
    raw: str, ocr_lexicon: Iterable[str] = DEFAULT_OCR_LEXICON
) -> ParsedCortexResponse:
    """Extract the three labeled fields from raw backend text.

    Raises ValueError("unparseable response: missing <field>") when a field
    cannot be found and ValueError("bad trigger") when the trigger field is
    not a base-10 non-negative integer.
    """
    if not raw or not raw.strip():
        raise ValueError("unparseable response: missing answer")

    fields: dict[str, list[str]] = {}
    current: str | None = None
    for line in _strip_fences(raw).splitlines():
        m = _FIELD_RE.match(line)
        if m:
            current = m.group(1).lower()
            if current.startswith("trigger"):
                current = "trigger_moment"
            value = m.group(2).strip().lstrip("*`").strip()
            fields.setdefault(current, []).append(value)
        elif current is not None and line.strip():
            fields[current].append(line.strip())

    for name in ("answer", "reasoning", "trigger_moment"):
        if name not in fields or not any(fields[name]):
            raise ValueError(f"unparseable response: missing {name}")

    answer = " ".join(s for s in fields["answer"] if s).strip()
    reasoning = " ".join(s for s in fields["reasoning"] if s).strip()
    trigger_text = " ".join(fields["trigger_moment"]).strip()
    m = _INT_RE.search(trigger_text)
    if m is None:
        raise ValueError("bad trigger")
    trigger = int(m.group(0))
    if trigger < 0:
        raise ValueError("bad trigger")

    lexicon = {w.lower() for w in ocr_lexicon}
    words = re.findall(r"[a-z]+", answer.lower())
    is_ocr = any(w in lexicon for w in words)
    return ParsedCortexResponse(answer, reasoning, trigger, is_ocr)


def validate_trigger(
    resp: ParsedCortexResponse, sampled_len: int
) -> tuple[ParsedCortexResponse, bool]:
    """Clamp the trigger into [0, sampled_len); returns (response, clamped).

    Out-of-range triggers are clamped to the nearest valid index rather
    than rejected: the grounding fallback chain recovers from a bad anchor,
    while rejection would discard an otherwise usable answer.
    """
    if sampled_len < 1:
        raise ValueError("sampled sequence must be non-empty")
    clamped = min(max(resp.trigger_moment, 0), sampled_len - 1)
    if clamped == resp.trigger_moment:
        return resp, False
    return (
        ParsedCortexResponse(resp.answer, resp.reasoning, clamped, resp.is_ocr_case),
        True,
    )


def load_exemplars(path: str | Path) -> tuple[FewShotExemplar, ...]:
    """Read a swappable exemplar set from a JSON list file."""
    items = json.loads(Path(path).read_text())
    return tuple(
        FewShotExemplar(
            question=str(i["question"]),
            answer=str(i["answer"]),
            reasoning=str(i["reasoning"]),
            trigger_moment=int(i["trigger_moment"]),
        )
        for i in items
    )


def dump_exemplars(path: str | Path, exemplars: Sequence[FewShotExemplar]) -> None:
    Path(path).write_text(
        json.dumps(
            [
                {
                    "question": e.question,
                    "answer": e.answer,
                    "reasoning": e.reasoning,
                    "trigger_moment": e.trigger_moment,
                }
                for e in exemplars
            ],
            indent=2,
        )
    )
