"""
Command-line entry point: synth -> build-seq -> run -> eval, plus a codec demo.
Every stage hands off through files under --out.
"""
import glob
import logging
import os
from typing import Optional, Sequence

import click
import numpy as np

from .. import create_toolkit
from ..codec.rvq import RvqCodec
from ..codec.services import CodecService
from ..constants import (
    BUILDER_MODES, EXIT_OK, EXIT_USAGE, FLOWS, INTERACTIONS, REPORT_DECIMALS, SUCCESS_MESSAGES,
)
from ..engine.policies import policy_from_name
from ..engine.services import EngineService
from ..errors import EmptySampleError
from ..evaluation.models import EvalConfig, Scenario
from ..evaluation.services import EvalService
from ..extensions import console
from ..io import (
    read_json, read_session, read_timelines, write_json_atomic, write_sequence, write_session,
    write_timelines,
)
from ..schemas import EvalConfigSchema, ManifestSchema
from ..sequence.models import BuilderConfig
from ..sequence.services import SequenceService
from ..sequence.tokenizers import TOKENIZERS
from ..synth.models import TimelineLayout
from ..synth.services import SynthService
from ..synth.templates import all_templates, get_template
from ..timeline.services import TimelineService
from .middleware import handle_errors, log_command, require_input

logger = logging.getLogger(__name__)

SPEC_CHOICES = ["minimal", "topic-guided", "detailed"]
POLICY_HELP = "silent, scripted, random or vad:THRESH"

manifest_schema = ManifestSchema()
eval_config_schema = EvalConfigSchema()


def _out_dir(toolkit, out: Optional[str]) -> str:
    path = out or toolkit.config.OUTPUT_DIR
    os.makedirs(path, exist_ok=True)
    return path


def _codec(toolkit, codec_path: Optional[str]) -> RvqCodec:
    return CodecService.load(codec_path) if codec_path else toolkit.codec


@click.group()
@click.option("--profile", default=None, help="Configuration profile (development, testing, production).")
@click.pass_context
def cli(ctx: click.Context, profile: Optional[str]) -> None:
    """Frame-synchronous full-duplex dialogue toolkit."""
    ctx.obj = create_toolkit(profile)


@cli.command("synth")
@click.option("--template", "templates", multiple=True, help="family:id, repeatable. Default: whole catalogue.")
@click.option("--spec", "specificity", type=click.Choice(SPEC_CHOICES), default="topic-guided", show_default=True)
@click.option("--flow", type=click.Choice(FLOWS), default="direct", show_default=True)
@click.option("--interaction", "interactions", type=click.Choice(INTERACTIONS), multiple=True)
@click.option("--n", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--response-delay-ms", type=click.FloatRange(min=0), default=None,
              help="Assistant response delay after a barge-in, past the scoring margin.")
@click.option("--out", default=None)
@click.pass_obj
@handle_errors
@log_command
def synth(toolkit, templates, specificity, flow, interactions, n, seed, response_delay_ms, out) -> int:
    """Generate timelines and a dataset manifest."""
    seed = toolkit.config.DEFAULT_SEED if seed is None else seed
    if templates:
        chosen = [get_template(key, specificity, flow, interactions) for key in templates]
    else:
        chosen = all_templates(specificity, flow, interactions)
    layout = TimelineLayout() if response_delay_ms is None else TimelineLayout(response_delay_ms=response_delay_ms)

    result = SynthService.generate_corpus(chosen, n, seed, layout=layout, clock=toolkit.clock)
    out = _out_dir(toolkit, out)
    timelines_path = os.path.join(out, "timelines.jsonl")
    write_timelines(timelines_path, result.timelines)
    write_json_atomic(os.path.join(out, "manifest.json"), manifest_schema.dump(result.manifest))

    console.print(SUCCESS_MESSAGES["synth"].format(kept=len(result.timelines), requested=n, path=timelines_path))
    return EXIT_OK


@cli.command("build-seq")
@click.option("--input", "input_path", required=True, help="Timeline JSONL.")
@click.option("--mode", type=click.Choice(BUILDER_MODES), default="pretraining", show_default=True)
@click.option("--tokenizer", type=click.Choice(sorted(TOKENIZERS)), default="word", show_default=True)
@click.option("--lookahead/--no-lookahead", default=False, show_default=True)
@click.option("--codec", "codec_path", default=None, help="Codec JSON; default is the profile's mock codec.")
@click.option("--out", default=None)
@click.pass_obj
@handle_errors
@log_command
@require_input("input_path", "codec_path")
def build_seq(toolkit, input_path, mode, tokenizer, lookahead, codec_path, out) -> int:
    """Interleave timelines into frame-synchronous sequences."""
    codec = _codec(toolkit, codec_path)
    config = BuilderConfig(lookahead_frames=toolkit.config.LOOKAHEAD_FRAMES, mode=mode)
    seq_dir = os.path.join(_out_dir(toolkit, out), "sequences")

    count = 0
    for timeline in read_timelines(input_path):
        seq = SequenceService.build_sequence(timeline, TOKENIZERS[tokenizer](), codec, config)
        if lookahead:
            seq = SequenceService.apply_text_lookahead(seq)
        write_sequence(os.path.join(seq_dir, f"{timeline.session_id}.jsonl"), seq, timeline.clock)
        count += 1

    console.print(SUCCESS_MESSAGES["build"].format(count=count, path=seq_dir))
    return EXIT_OK


@cli.command("run")
@click.option("--input", "input_path", required=True, help="Timeline JSONL driving the user channel.")
@click.option("--policy", "policy_name", default="silent", show_default=True, help=POLICY_HELP)
@click.option("--lookahead/--no-lookahead", default=False, show_default=True,
              help="Scripted policy emits text one lookahead ahead of speech.")
@click.option("--codec", "codec_path", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None)
@click.pass_obj
@handle_errors
@log_command
@require_input("input_path", "codec_path")
def run(toolkit, input_path, policy_name, lookahead, codec_path, seed, out) -> int:
    """Drive the engine with each timeline's user channel."""
    seed = toolkit.config.DEFAULT_SEED if seed is None else seed
    codec = _codec(toolkit, codec_path)
    session_dir = os.path.join(_out_dir(toolkit, out), "sessions")

    count = 0
    for index, timeline in enumerate(read_timelines(input_path)):
        n_frames = TimelineService.frame_count(timeline) + toolkit.config.TAIL_FRAMES
        policy = policy_from_name(
            policy_name, timeline=timeline, codec=codec, seed=seed + index, n_frames=n_frames, lookahead=lookahead)
        user_stream = SequenceService.user_frames(timeline, codec, n_frames)
        log = EngineService.run_session(user_stream, policy, timeline.clock, codec, timeline.session_id)
        write_session(os.path.join(session_dir, f"{timeline.session_id}.jsonl"), log)
        count += 1

    console.print(SUCCESS_MESSAGES["run"].format(count=count, path=session_dir))
    return EXIT_OK


@cli.command("eval")
@click.option("--sessions", "sessions_dir", required=True, help="Directory of session JSONL files.")
@click.option("--timelines", "timelines_path", required=True, help="Ground-truth Timeline JSONL.")
@click.option("--scenario", type=click.Choice([s.value for s in Scenario]), default="user_interruption",
              show_default=True)
@click.option("--config", "config_path", default=None, help="EvalConfig JSON.")
@click.option("--out", default=None)
@click.pass_obj
@handle_errors
@log_command
@require_input("sessions_dir", "timelines_path", "config_path")
def evaluate(toolkit, sessions_dir, timelines_path, scenario, config_path, out) -> int:
    """Score sessions against their timelines."""
    cfg = eval_config_schema.load(read_json(config_path)) if config_path else EvalConfig()
    timelines = {t.session_id: t for t in read_timelines(timelines_path)}
    paths = sorted(glob.glob(os.path.join(sessions_dir, "*.jsonl")))
    if not paths:
        raise EmptySampleError()
    sessions = [read_session(path) for path in paths]

    report = EvalService.evaluate_corpus(sessions, timelines, Scenario(scenario), cfg)
    report_path = os.path.join(_out_dir(toolkit, out), f"report_{scenario}.json")
    EvalService.write_report(report, report_path)

    console.print(SUCCESS_MESSAGES["eval"].format(count=report.total_n, path=report_path))
    return EXIT_OK


@cli.command("codec")
@click.option("--depths", type=click.IntRange(min=1), default=None)
@click.option("--k", type=click.IntRange(min=1), default=None)
@click.option("--dimension", type=click.IntRange(min=1), default=None)
@click.option("--frames", type=click.IntRange(min=1), default=None)
@click.option("--iterations", type=click.IntRange(min=1), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", default=None)
@click.pass_obj
@handle_errors
@log_command
def codec(toolkit, depths, k, dimension, frames, iterations, seed, out) -> int:
    """Fit a codec on seeded synthetic frames and report per-depth reconstruction."""
    cfg = toolkit.config
    seed = cfg.DEFAULT_SEED if seed is None else seed
    depths = depths or cfg.DEMO_DEPTHS
    k = k or cfg.DEMO_CODEBOOK_SIZE
    dimension = dimension or cfg.DEMO_DIMENSION
    frames = frames or cfg.DEMO_TRAINING_FRAMES

    training = np.random.default_rng(seed).standard_normal((frames, dimension))
    fitted = CodecService.fit_codebooks(
        training, depths, k, iterations or cfg.DEMO_ITERATIONS, seed, clock=toolkit.clock)
    round_trip = fitted.decode_batch(fitted.encode_batch(training))

    out = _out_dir(toolkit, out)
    CodecService.save(fitted, os.path.join(out, "codec.json"))
    write_json_atomic(os.path.join(out, "codec_report.json"), {
        "seed": seed,
        "frames": frames,
        "depths": depths,
        "k": k,
        "dimension": dimension,
        "reconstruction_mse": [
            round(fitted.reconstruction_mse(training, depth), REPORT_DECIMALS) for depth in range(1, depths + 1)
        ],
        "round_trip_mse": round(float(np.mean((training - round_trip) ** 2)), REPORT_DECIMALS),
        "training_mse": [round(h[-1], REPORT_DECIMALS) for h in fitted.training_mse],
    })

    console.print(SUCCESS_MESSAGES["codec"].format(path=out))
    return EXIT_OK


def run_command(argv: Sequence[str]) -> int:
    """
    Run one command and return its exit code: 0 success, 1 usage error,
    2 data error.
    """
    try:
        result = cli.main(args=list(argv), prog_name="duplex-kit", standalone_mode=False)
    except click.UsageError as e:
        logger.error(f"Usage error: {e.format_message()}")
        e.show()
        return EXIT_USAGE
    except click.ClickException as e:
        e.show()
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    return EXIT_OK if result is None else int(result)
