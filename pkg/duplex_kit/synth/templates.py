"""
Scenario catalogue and dialogue grammars.

A grammar maps ``<symbol>`` to its alternatives; anything not in the map is
a terminal. ``<dialogue>`` expands to a list of turn types (keys of
TURN_TYPES), each of which names the symbol that produces its text.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..constants import CLARIFICATION_MARKER, ERROR_MESSAGES, FAMILY_ALIASES
from ..errors import DuplexError
from ..models import Channel, Role
from .models import Family, Flow, Grammar, Interaction, ScenarioTemplate, Specificity

MAX_DEPTH = 12

TASK_SCENARIOS: Tuple[Tuple[str, Tuple[str, ...]], ...] = (
    ("restaurant booking", ("table", "dinner", "reservation", "menu")),
    ("hotel check in", ("room", "key", "checkout", "breakfast")),
    ("flight change", ("flight", "seat", "gate", "ticket")),
    ("bank support", ("account", "card", "transfer", "balance")),
    ("tech support", ("laptop", "router", "password", "update")),
    ("doctor appointment", ("appointment", "clinic", "doctor", "symptoms")),
    ("food delivery", ("order", "pizza", "address", "driver")),
    ("car rental", ("car", "pickup", "insurance", "mileage")),
    ("online shopping", ("package", "refund", "size", "shipping")),
    ("language tutor", ("phrase", "grammar", "lesson", "accent")),
    ("fitness coach", ("workout", "stretch", "run", "plan")),
    ("recipe helper", ("recipe", "oven", "flour", "sauce")),
    ("travel planner", ("trip", "museum", "train", "beach")),
    ("job interview", ("resume", "role", "salary", "team")),
    ("home repair", ("sink", "leak", "plumber", "faucet")),
)

GAME_SCENARIOS: Tuple[Tuple[str, Tuple[str, ...]], ...] = (
    ("twenty questions", ("animal", "object", "place", "guess")),
    ("word chain", ("apple", "eagle", "lemon", "night")),
    ("counting game", ("one", "two", "three", "four")),
    ("riddle time", ("riddle", "answer", "clue", "hint")),
    ("rhyme battle", ("cat", "hat", "bat", "mat")),
    ("trivia quiz", ("capital", "river", "planet", "year")),
    ("sing along", ("chorus", "verse", "melody", "song")),
)

OPEN_SCENARIOS: Tuple[Tuple[str, Tuple[str, ...]], ...] = (
    ("weekend plans", ("hiking", "movie", "friends", "weather")),
    ("favorite books", ("novel", "author", "chapter", "library")),
    ("music taste", ("band", "concert", "album", "guitar")),
    ("daily routine", ("coffee", "commute", "lunch", "sleep")),
    ("pets", ("dog", "cat", "walk", "vet")),
    ("sports", ("match", "team", "score", "season")),
)

CATALOGUE: Dict[Family, Tuple[Tuple[str, Tuple[str, ...]], ...]] = {
    Family.TASK_ORIENTED: TASK_SCENARIOS,
    Family.SPEECH_GAME: GAME_SCENARIOS,
    Family.OPEN_DOMAIN: OPEN_SCENARIOS,
}

# turn type -> (speaker, role, text symbol, marker)
TURN_TYPES: Dict[str, Tuple[Channel, Role, str, str]] = {
    "USER_REQUEST": (Channel.USER, Role.SPEECH, "<user_request>", ""),
    "USER_STORY": (Channel.USER, Role.SPEECH, "<user_story>", ""),
    "USER_CLARIFY_REPLY": (Channel.USER, Role.SPEECH, "<clarify_reply>", ""),
    "USER_BACKCHANNEL": (Channel.USER, Role.BACKCHANNEL, "<backchannel>", ""),
    "USER_INTERRUPT": (Channel.USER, Role.INTERRUPT, "<interrupt>", ""),
    "USER_SIMULTANEOUS": (Channel.USER, Role.SIMULTANEOUS, "<game_move>", ""),
    "ASSISTANT_ANSWER": (Channel.ASSISTANT, Role.SPEECH, "<answer>", ""),
    "ASSISTANT_ANSWER_LONG": (Channel.ASSISTANT, Role.SPEECH, "<long_answer>", ""),
    "ASSISTANT_CLARIFY": (Channel.ASSISTANT, Role.SPEECH, "<clarify>", CLARIFICATION_MARKER),
    "ASSISTANT_RESPONSE": (Channel.ASSISTANT, Role.SPEECH, "<interrupt_answer>", ""),
    "ASSISTANT_BACKCHANNEL": (Channel.ASSISTANT, Role.BACKCHANNEL, "<backchannel>", ""),
    "ASSISTANT_GAME_PROMPT": (Channel.ASSISTANT, Role.SPEECH, "<game_prompt>", ""),
}

_FEATURES: Dict[Interaction, Tuple[Tuple[str, ...], ...]] = {
    Interaction.BACKCHANNEL: (
        ("USER_STORY", "ASSISTANT_BACKCHANNEL", "ASSISTANT_ANSWER"),
        ("USER_REQUEST", "ASSISTANT_ANSWER_LONG", "USER_BACKCHANNEL"),
    ),
    Interaction.INTERRUPT: (
        ("USER_REQUEST", "ASSISTANT_ANSWER_LONG", "USER_INTERRUPT", "ASSISTANT_RESPONSE"),
    ),
    Interaction.SIMULTANEOUS: (
        ("ASSISTANT_GAME_PROMPT", "USER_SIMULTANEOUS", "ASSISTANT_ANSWER"),
    ),
}

_DETAIL: Dict[Specificity, Tuple[Tuple[str, ...], ...]] = {
    Specificity.MINIMAL: ((),),
    Specificity.TOPIC_GUIDED: (("about", "the", "<topic>"), ("for", "my", "<topic>")),
    Specificity.DETAILED: (
        ("for", "<time>", "with", "the", "<topic>"),
        ("about", "the", "<topic>", "and", "the", "<topic>", "<time>"),
    ),
}


def build_grammar(template: ScenarioTemplate) -> Grammar:
    """Productions for one template. Interactions become mandatory features."""
    core: Tuple[str, ...] = ("USER_REQUEST", "ASSISTANT_ANSWER")
    if template.flow is Flow.INQUIRY:
        core = ("USER_REQUEST", "ASSISTANT_CLARIFY", "USER_CLARIFY_REPLY", "ASSISTANT_ANSWER")
    if template.family is Family.SPEECH_GAME:
        core = ("ASSISTANT_GAME_PROMPT",) + core

    features: List[str] = [f"<feature_{i.value}>" for i in template.interactions]
    grammar: Dict[str, Tuple[Tuple[str, ...], ...]] = {
        "<dialogue>": (core + tuple(features) + ("<more>",),),
        "<more>": ((), ("<exchange>",), ("<exchange>", "<more>")),
        "<exchange>": (
            ("USER_REQUEST", "ASSISTANT_ANSWER"),
            core,
        ),
        "<topic>": tuple((t,) for t in template.topics),
        "<time>": (("tonight",), ("tomorrow", "morning"), ("next", "week"), ("at", "noon")),
        "<detail>": _DETAIL[template.specificity],
        "<user_request>": (
            ("could", "you", "help", "with", "the", "<topic>", "<detail>"),
            ("i", "need", "the", "<topic>", "<detail>"),
            ("tell", "me", "about", "the", "<topic>", "<detail>"),
            ("what", "about", "the", "<topic>"),
        ),
        "<user_story>": (
            ("so", "yesterday", "i", "was", "looking", "at", "the", "<topic>", "and", "then", "the", "<topic>",
             "was", "gone"),
            ("my", "friend", "told", "me", "the", "<topic>", "was", "great", "but", "i", "still", "worry",
             "about", "the", "<topic>"),
        ),
        "<clarify_reply>": (("the", "<topic>", "please"), ("i", "mean", "the", "<topic>", "<detail>")),
        "<answer>": (
            ("sure", "the", "<topic>", "is", "ready"),
            ("okay", "i", "found", "the", "<topic>", "<detail>"),
            ("the", "<topic>", "looks", "fine"),
        ),
        "<long_answer>": (
            ("<answer>", "and", "the", "<topic>", "should", "also", "be", "available", "<time>", "if",
             "you", "want", "it"),
            ("let", "me", "explain", "the", "<topic>", "first", "then", "we", "can", "look", "at", "the",
             "<topic>", "together"),
        ),
        "<clarify>": (("which", "<topic>", "do", "you", "mean"), ("do", "you", "mean", "the", "<topic>")),
        "<interrupt>": (("wait", "what", "about", "the", "<topic>"), ("sorry", "the", "<topic>", "instead")),
        "<interrupt_answer>": (("oh", "the", "<topic>", "sure"), ("right", "the", "<topic>", "then")),
        "<backchannel>": (("yeah",), ("mhm",), ("okay",), ("right",), ("uh", "huh")),
        "<game_prompt>": (("ready", "say", "<topic>", "with", "me"), ("your", "turn", "the", "<topic>")),
        "<game_move>": (("<topic>",), ("<topic>", "<topic>")),
    }
    for interaction in template.interactions:
        grammar[f"<feature_{interaction.value}>"] = _FEATURES[interaction]
    return grammar


def expand(grammar: Grammar, symbol: str, rng: np.random.Generator, depth: int = 0) -> List[str]:
    """Left-to-right seeded expansion. Past MAX_DEPTH only first alternatives are taken."""
    if symbol not in grammar:
        return [symbol]
    alternatives = grammar[symbol]
    if not alternatives:
        raise DuplexError(ERROR_MESSAGES["empty_grammar"].format(symbol=symbol))
    if depth >= MAX_DEPTH:
        choice = alternatives[0]
    else:
        choice = alternatives[int(rng.integers(len(alternatives)))]
    out: List[str] = []
    for item in choice:
        out.extend(expand(grammar, item, rng, depth + 1))
    return out


def get_template(
    key: str,
    specificity: str = Specificity.TOPIC_GUIDED.value,
    flow: str = Flow.DIRECT.value,
    interactions: Sequence[str] = (),
) -> ScenarioTemplate:
    """Resolve ``family:id`` (family may be an alias such as ``task``) to a template."""
    family_name, _, raw_id = key.partition(":")
    family_name = FAMILY_ALIASES.get(family_name, family_name)
    try:
        family = Family(family_name)
        scenario_id = int(raw_id)
    except ValueError as exc:
        raise DuplexError(ERROR_MESSAGES["unknown_template"].format(template=key)) from exc
    scenarios = CATALOGUE[family]
    if not 1 <= scenario_id <= len(scenarios):
        raise DuplexError(ERROR_MESSAGES["unknown_template"].format(template=key))
    name, topics = scenarios[scenario_id - 1]
    return ScenarioTemplate(
        family=family,
        scenario_id=scenario_id,
        name=name,
        topics=topics,
        specificity=Specificity(specificity.replace("-", "_")),
        flow=Flow(flow),
        interactions=tuple(interactions),
    )


def all_templates(
    specificity: Optional[str] = None,
    flow: str = Flow.DIRECT.value,
    interactions: Sequence[str] = (),
) -> List[ScenarioTemplate]:
    templates = []
    for family, scenarios in CATALOGUE.items():
        short = {v: k for k, v in FAMILY_ALIASES.items()}[family.value]
        for scenario_id in range(1, len(scenarios) + 1):
            templates.append(get_template(
                f"{short}:{scenario_id}", specificity or Specificity.TOPIC_GUIDED.value, flow, interactions))
    return templates
