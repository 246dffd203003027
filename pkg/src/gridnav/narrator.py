"""Numbered walking guides from terse scripts.

The deterministic template engine is the normative backend. An optional
completion-endpoint backend sends the terse block to any local text-in /
text-out model, then strictly validates the reply; anything that fails the
format contract falls back to the template so callers always receive a
well-formed guide.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace

import httpx

from .compressor import Move, PortalTransit, TerseScript, render_terse
from .errors import GridNavError


class EmptyScript(GridNavError):
    """Cannot narrate a script with no commands."""


class CompletionError(GridNavError):
    """Base class for completion-endpoint transport failures."""


class CompletionTimeout(CompletionError):
    """Endpoint did not answer within the configured timeout."""


class EndpointUnavailable(CompletionError):
    """Endpoint refused the connection or returned a non-success status."""


class MalformedResponse(CompletionError):
    """Endpoint reply carried no usable completion text."""


DIRECTION_WORDS = {
    "N": "north",
    "S": "south",
    "E": "east",
    "W": "west",
    "NE": "northeast",
    "NW": "northwest",
    "SE": "southeast",
    "SW": "southwest",
}

# Example numbering here is consecutive (1..3); showing a duplicated index
# would teach the model output the validator must reject.
DEFAULT_SYSTEM_PROMPT = """\
You are a precise navigation assistant. Convert provided terse commands into a numbered walking guide. Use "Start by walking..." for step 1, "Then walk..." for steps 2...(n-1), "Take the escalator from Floor n to n+1", and "Finally walk..." for the last step. Output one numbered line per command.

Here is an example case given:
Terse commands:
Go East 3 steps
Take the escalator from Floor 0 to 1
Go North 1 step

For the example terse commands, the output is:
1. Start by walking east for 3 steps.
2. Take the escalator from Floor 0 to 1.
3. Finally, walk north for 1 step, and you will reach your destination.

Terse commands are given as follows: you have to convert them into a numbered list of directions as provided in the prior example. Keep the step number as given; do not modify it. Do not change the order of the steps, and do not add any additional steps. The output should be numbered lines starting with a number followed by a period and a space."""


@dataclass(frozen=True)
class SystemPrompt:
    text: str = DEFAULT_SYSTEM_PROMPT

    def __post_init__(self):
        if not self.text:
            raise ValueError("system prompt must be non-empty")


@dataclass(frozen=True)
class LmConfig:
    """Connection settings for a text-completion endpoint."""

    endpoint: str
    max_new_tokens: int | None = None
    temperature: float = 0.0
    top_p: float = 1.0
    timeout: float = 10.0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass(frozen=True)
class InstructionScript:
    """Validated numbered guide; ``lines`` holds (index, sentence) pairs."""

    lines: tuple[tuple[int, str], ...]
    source: str  # "template" or "language_model"

    def to_text(self) -> str:
        return "\n".join(f"{idx}. {text}" for idx, text in self.lines)


@dataclass(frozen=True)
class RepairReport:
    """Why a completion was rejected; one entry per violation."""

    violations: tuple[str, ...]


def _phrase(move: Move) -> str:
    unit = "step" if move.count == 1 else "steps"
    return f"{DIRECTION_WORDS[move.direction]} for {move.count} {unit}"


def render_template(script: TerseScript) -> InstructionScript:
    """Deterministic guide: Start by/Then/Finally phrasing, one line per command."""
    if not script.commands:
        raise EmptyScript("terse script has no commands")
    last = len(script.commands)
    lines = []
    for idx, cmd in enumerate(script.commands, 1):
        if isinstance(cmd, PortalTransit):
            text = f"Take the {cmd.kind} from Floor {cmd.from_floor} to {cmd.to_floor}."
        elif last == 1:
            text = f"Start by walking {_phrase(cmd)}, and you will reach your destination."
        elif idx == 1:
            text = f"Start by walking {_phrase(cmd)}."
        elif idx == last:
            text = f"Finally, walk {_phrase(cmd)}, and you will reach your destination."
        else:
            text = f"Then walk {_phrase(cmd)}."
        lines.append((idx, text))
    return InstructionScript(tuple(lines), source="template")


def build_prompt(system: SystemPrompt, terse_block: str) -> str:
    """System prompt followed by the terse command block."""
    if not terse_block.strip():
        raise ValueError("terse block must be non-empty")
    return f"{system.text}\n\n{terse_block.strip()}\n"


def invoke_lm(prompt: str, config: LmConfig) -> str:
    """Single completion request; no retries.

    Request: POST {"prompt", "max_new_tokens", "temperature", "top_p"}.
    Response: {"text": "..."}.
    """
    payload: dict = {
        "prompt": prompt,
        "temperature": config.temperature,
        "top_p": config.top_p,
    }
    if config.max_new_tokens is not None:
        payload["max_new_tokens"] = config.max_new_tokens
    try:
        response = httpx.post(config.endpoint, json=payload, timeout=config.timeout)
    except httpx.TimeoutException as exc:
        raise CompletionTimeout(f"no reply within {config.timeout}s from {config.endpoint}") from exc
    except httpx.HTTPError as exc:
        raise EndpointUnavailable(f"cannot reach {config.endpoint}: {exc}") from exc
    if response.status_code != 200:
        raise EndpointUnavailable(f"{config.endpoint} answered HTTP {response.status_code}")
    try:
        doc = response.json()
    except ValueError as exc:
        raise MalformedResponse("completion reply is not JSON") from exc
    text = doc.get("text") if isinstance(doc, dict) else None
    if not isinstance(text, str):
        raise MalformedResponse("completion reply has no 'text' field")
    return text


_NUMBERED_LINE = re.compile(r"^(\d+)\.\s(.+)$")


def postprocess(raw: str, expected: TerseScript) -> InstructionScript | RepairReport:
    """Extract and validate numbered lines against the terse script.

    Rejects (returns a RepairReport, never raises) when the line count,
    numbering, step counts, spelled directions, or portal sentences do not
    match; the caller is expected to fall back to the template.
    """
    entries: list[tuple[int, str]] = []
    for line in raw.splitlines():
        match = _NUMBERED_LINE.match(line.strip())
        if match:
            entries.append((int(match.group(1)), match.group(2).strip()))

    commands = expected.commands
    violations: list[str] = []
    if len(entries) != len(commands):
        violations.append(f"expected {len(commands)} numbered lines, found {len(entries)}")
    indices = [idx for idx, _ in entries]
    if indices != list(range(1, len(entries) + 1)):
        violations.append(f"non-consecutive numbering: {indices}")
    for k, (cmd, (_, text)) in enumerate(zip(commands, entries), 1):
        if isinstance(cmd, Move):
            word = DIRECTION_WORDS[cmd.direction]
            if word not in text.lower():
                violations.append(f"line {k} does not mention '{word}'")
            if not re.search(rf"\b{cmd.count}\b", text):
                violations.append(f"line {k} does not carry the step count {cmd.count}")
        else:
            sentence = f"Take the {cmd.kind} from Floor {cmd.from_floor} to {cmd.to_floor}"
            if sentence not in text:
                violations.append(f"line {k} must contain '{sentence}' verbatim")
    if violations:
        return RepairReport(tuple(violations))
    return InstructionScript(tuple(entries), source="language_model")


def narrate(
    script: TerseScript,
    mode: str = "template",
    config: LmConfig | None = None,
    system: SystemPrompt | None = None,
) -> InstructionScript:
    """Produce a validated guide; lm mode falls back to the template on any failure."""
    if not script.commands:
        raise EmptyScript("terse script has no commands")
    if mode == "template":
        return render_template(script)
    if mode != "lm":
        raise ValueError(f"mode must be 'template' or 'lm', got {mode!r}")
    if config is None:
        raise ValueError("lm mode requires an LmConfig")
    if config.max_new_tokens is None:
        config = replace(config, max_new_tokens=32 + 24 * len(script.commands))
    prompt = build_prompt(system or SystemPrompt(), "\n".join(render_terse(script)))
    try:
        raw = invoke_lm(prompt, config)
    except CompletionError:
        return render_template(script)
    result = postprocess(raw, script)
    if isinstance(result, RepairReport):
        return render_template(script)
    return result
