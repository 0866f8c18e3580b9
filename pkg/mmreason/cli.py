"""Implement the CLI for mmreason."""
import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
import typer

from .config import RunConfig, load_run_config
from .data.corpus import FEATURES_FILE, Corpus, load_corpus, save_corpus, split_file
from .data.features import load_vision_features
from .data.render import LETTERS
from .data.sample import Sample, Split, load_dataset
from .data.synthetic import SyntheticConfig, generate_splits
from .eval import (
    MetricRecord,
    ablation_report,
    abstain_record,
    accuracy_record,
    mean_rouge_l,
)
from .exceptions import ConfigError, LengthMismatchError, MMReasonError, StageSpecError
from .model import load_checkpoint
from .pipeline import (
    Prediction,
    StageSpec,
    TwoStagePredictor,
    ablation_grid,
    hallucination_rate,
    predict_all,
    run_ablation,
    train_stage,
    variant_slug,
)
from .settings import ManifestFile, load_yaml
from .utils import read_jsonl, write_json, write_jsonl

logger = logging.getLogger(__name__)

app = typer.Typer()

MANIFEST_FILE = "manifest.yaml"


def _click_modules() -> List[Any]:
    """The click package and the copy typer bundles, when it ships one."""
    modules: List[Any] = [click]
    try:
        from typer import _click as bundled  # type: ignore[attr-defined]
    except ImportError:
        return modules
    if bundled is not click:
        modules.append(bundled)
    return modules


USAGE_ERRORS = tuple(m.exceptions.UsageError for m in _click_modules())
ABORT_ERRORS = tuple(m.exceptions.Abort for m in _click_modules())


class VisionFilter(str, Enum):
    BOTH = "both"
    ON = "on"
    OFF = "off"


def parse_overrides(items: Optional[List[str]]) -> Dict[str, Any]:
    """
    Turn 'section.key=value' strings into a nested dictionary.

    Values are parsed as JSON where possible and kept as strings otherwise.
    """
    result: Dict[str, Any] = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if sep == "" or key.strip() == "":
            raise ConfigError(f"override '{item}' is not of the form key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        *parents, leaf = key.strip().split(".")
        target = result
        for parent in parents:
            target = target.setdefault(parent, {})
        target[leaf] = value
    return result


def _config(
    config: Optional[Path], overrides: Optional[List[str]], **options: Any
) -> RunConfig:
    """Layer the config file, `--set` overrides and dedicated options."""
    layered = parse_overrides(overrides)
    for dotted, value in options.items():
        if value is None:
            continue
        if "__" in dotted:
            section, key = dotted.split("__")
            layered.setdefault(section, {})[key] = value
        else:
            layered[dotted] = value
    return load_run_config(Path(config) if config is not None else None, layered)


def _record_invocation(
    manifest_path: Path, command: str, params: Dict[str, Any]
) -> None:
    """Store a command and its parameters so that `rerun` can repeat it."""
    plain = {}
    for key, value in params.items():
        if isinstance(value, Enum):
            value = value.value
        elif isinstance(value, Path):
            value = str(value)
        elif isinstance(value, (list, tuple)):
            value = [str(v) for v in value]
        plain[key] = value
    ManifestFile(manifest_path).merge(
        {"invocation": {"command": command, "params": plain}}
    )


ConfigOption = typer.Option(None, "--config", "-c", help="JSON config file.")
SetOption = typer.Option(
    None,
    "--set",
    help="Override a config value, e.g. --set optim.lr=0.001. Repeatable.",
)


@app.callback()
def root(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug logging.")):
    """Two-stage multimodal reasoning: data, training, inference and ablations."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@app.command("gen-data")
def gen_data(
    out: Path = typer.Option(..., "--out", help="Directory of the corpus."),
    config: Optional[Path] = ConfigOption,
    overrides: Optional[List[str]] = SetOption,
    n_colors: Optional[int] = typer.Option(None, "--n-colors"),
    n_train: Optional[int] = typer.Option(None, "--n-train"),
    n_val: Optional[int] = typer.Option(None, "--n-val"),
    n_test: Optional[int] = typer.Option(None, "--n-test"),
    seed: Optional[int] = typer.Option(None, "--seed"),
):
    """Generate the synthetic corpus: three JSONL splits and one feature file."""
    params = dict(locals())
    out = Path(out)
    cfg = _config(
        config,
        overrides,
        data__n_colors=n_colors,
        data__n_train=n_train,
        data__n_val=n_val,
        data__n_test=n_test,
        seed=seed,
    )
    data = cfg.data
    synth = SyntheticConfig(
        m=cfg.model.m,
        d_v=cfg.model.d_v,
        n_colors=data.n_colors,
        n_distractors=data.n_distractors,
        seed=cfg.seed,
        noise=data.noise,
        feature_style=data.feature_style,
    )
    sizes = {Split.TRAIN: data.n_train, Split.VAL: data.n_val, Split.TEST: data.n_test}
    splits, features = generate_splits(synth, sizes)
    corpus = Corpus(
        train=splits[Split.TRAIN],
        val=splits[Split.VAL],
        test=splits[Split.TEST],
        features=features,
    )
    try:
        save_corpus(
            corpus, out, manifest={"seed": cfg.seed, "generator": cfg.to_dict()["data"]}
        )
    except OSError as e:
        raise ConfigError(f"cannot write corpus to {out}: {e}") from e
    _record_invocation(out / "corpus.yaml", "gen-data", params)
    typer.echo(f"Wrote {sum(sizes.values())} samples to {out}")


@app.command()
def train(
    stage: str = typer.Option(..., "--stage", help="rationale, answer or one:FORMAT."),
    config: Optional[Path] = ConfigOption,
    overrides: Optional[List[str]] = SetOption,
    no_vision: bool = typer.Option(
        False, "--no-vision", help="Feed all-zero vision features."
    ),
    seed: Optional[int] = typer.Option(None, "--seed"),
    epochs: Optional[int] = typer.Option(None, "--epochs"),
    out: Optional[Path] = typer.Option(
        None, "--out", help="Run directory of this model."
    ),
):
    """Train one model and write its checkpoint, log, metrics and manifest."""
    params = dict(locals())
    spec = StageSpec.parse(stage, use_vision=not no_vision)
    cfg = _config(config, overrides, optim__epochs=epochs, seed=seed)
    run_seed = cfg.seed
    cfg.validate_paths(need_data=True)
    out_dir = (
        Path(out)
        if out is not None
        else cfg.paths.run_path / "train" / f"{variant_slug(spec)}-seed-{run_seed}"
    )
    corpus = load_corpus(cfg.paths.data_path)

    ckpt_path = train_stage(
        spec, corpus.train, corpus.features, cfg, run_seed, out_dir, corpus.val
    )
    metadata = dict(load_checkpoint(ckpt_path).metadata)
    metadata.pop("vocabulary")
    write_json(metadata, out_dir / "metrics.json")
    manifest = ManifestFile(out_dir / MANIFEST_FILE)
    manifest.merge(
        {
            "seed": run_seed,
            "config": cfg.to_dict(),
            "spec": {"stage": spec.name, "use_vision": spec.use_vision},
            "checkpoint": str(ckpt_path),
        }
    )
    _record_invocation(out_dir / MANIFEST_FILE, "train", params)
    typer.echo(f"Wrote checkpoint {ckpt_path}")


def _load_samples(data: Path, split: Split) -> List[Sample]:
    """Samples from a JSONL file or from a split of a corpus directory."""
    data, split = Path(data), Split(split)
    if data.is_dir():
        return load_dataset(data / split_file(split), split)
    if not data.is_file():
        raise ConfigError(f"Data {data} does not exist.")
    return load_dataset(data, split)


def _features_path(data: Path, features: Optional[Path]) -> Path:
    if features is not None:
        return Path(features)
    data = Path(data)
    return (data if data.is_dir() else data.parent) / FEATURES_FILE


@app.command()
def infer(
    ckpt1: Path = typer.Option(..., "--ckpt1", help="Rationale checkpoint."),
    ckpt2: Path = typer.Option(..., "--ckpt2", help="Answer checkpoint."),
    data: Path = typer.Option(..., "--data", help="Corpus directory or JSONL file."),
    out: Path = typer.Option(..., "--out", help="Predictions JSONL."),
    split: Split = typer.Option(
        Split.TEST, "--split", help="Split of a corpus directory."
    ),
    features: Optional[Path] = typer.Option(
        None, "--features", help="MMVF feature file."
    ),
):
    """Generate rationales, then answers, for every sample."""
    params = dict(locals())
    out = Path(out)
    for path in (ckpt1, ckpt2):
        if not Path(path).is_file():
            raise ConfigError(f"Checkpoint {path} does not exist.")
    samples = _load_samples(data, split)
    feats = load_vision_features(_features_path(data, features))
    predictor = TwoStagePredictor(ckpt1, ckpt2)
    predictions = predict_all(predictor, samples, feats)
    write_jsonl([p.to_record() for p in predictions], out)
    _record_invocation(out.with_name(f"{out.stem}.{MANIFEST_FILE}"), "infer", params)
    typer.echo(f"Wrote {len(predictions)} predictions to {out}")


def evaluate_predictions(
    records: List[Dict[str, Any]], golds: List[Sample], features=None, n_colors: int = 4
) -> List[MetricRecord]:
    """
    Score prediction records ({id, rationale, answer_letter}) against gold samples.

    Every gold sample needs a prediction. RougeL is reported when predictions
    carry rationales, the hallucination rate when features are given.
    """
    by_id = {r["id"]: r for r in records}
    missing = [s.id for s in golds if s.id not in by_id]
    if missing:
        raise LengthMismatchError(
            f"no predictions for {len(missing)} samples, e.g. {missing[:3]}"
        )
    predictions = []
    for sample in golds:
        record = by_id[sample.id]
        letter = record.get("answer_letter")
        valid = letter and letter in LETTERS[: sample.n_options]
        answer = LETTERS.index(letter) if valid else None
        predictions.append(Prediction(sample.id, "", record.get("rationale"), answer))

    answers = [p.answer_index for p in predictions]
    metrics = [
        accuracy_record(answers, [s.answer_index for s in golds]),
        abstain_record(answers),
    ]
    if any(p.rationale is not None for p in predictions):
        metrics.append(
            mean_rouge_l(
                [p.rationale or "" for p in predictions],
                [s.rationale or "" for s in golds],
            )
        )
        if features is not None:
            rate = hallucination_rate(predictions, golds, features, n_colors)
            if rate is not None:
                metrics.append(MetricRecord("hallucination_rate", rate, len(golds)))
    return metrics


@app.command("eval")
def eval_cmd(
    pred: Path = typer.Option(..., "--pred", help="Predictions JSONL."),
    gold: Path = typer.Option(
        ..., "--gold", help="Corpus directory or gold JSONL file."
    ),
    out: Optional[Path] = typer.Option(
        None, "--out", help="Metrics JSON; printed if omitted."
    ),
    split: Split = typer.Option(
        Split.TEST, "--split", help="Split of a corpus directory."
    ),
    n_colors: int = typer.Option(
        4, "--n-colors", help="Colors of the synthetic corpus."
    ),
):
    """Compute accuracy, abstain rate and RougeL of predictions."""
    params = dict(locals())
    if not Path(pred).is_file():
        raise ConfigError(f"Predictions {pred} do not exist.")
    golds = _load_samples(gold, split)
    features_file = _features_path(gold, None)
    features = load_vision_features(features_file) if features_file.is_file() else None
    metrics = evaluate_predictions(read_jsonl(pred), golds, features, n_colors)

    records = [m.to_dict() | {"per_sample": None} for m in metrics]
    if out is not None:
        write_json(records, Path(out))
        _record_invocation(
            Path(out).with_name(f"{Path(out).stem}.{MANIFEST_FILE}"), "eval", params
        )
    typer.echo(ablation_report([(Path(pred).stem, metrics)]))


@app.command()
def ablate(
    seeds: int = typer.Option(3, "--seeds", help="Number of seeds per variant."),
    config: Optional[Path] = ConfigOption,
    overrides: Optional[List[str]] = SetOption,
    out: Optional[Path] = typer.Option(
        None, "--out", help="Directory of the ablation."
    ),
    variant: Optional[List[str]] = typer.Option(
        None,
        "--variant",
        help="Restrict to stages like one:QCM_A or answer. Repeatable.",
    ),
    vision: VisionFilter = typer.Option(
        VisionFilter.BOTH, "--vision", help="Restrict to runs with or without vision."
    ),
):
    """Run the variant grid over several seeds and write the report."""
    params = dict(locals())
    if seeds < 1:
        raise ConfigError(f"--seeds must be at least 1, got {seeds}")
    cfg = _config(config, overrides)
    cfg.validate_paths(need_data=True)
    out_dir = Path(out) if out is not None else cfg.paths.run_path / "ablate"

    specs = ablation_grid()
    if variant:
        wanted = [StageSpec.parse(v).name for v in variant]
        specs = [s for s in specs if s.name in wanted]
    vision = VisionFilter(vision)
    if vision is not VisionFilter.BOTH:
        specs = [s for s in specs if s.use_vision == (vision is VisionFilter.ON)]
    if len(specs) == 0:
        raise StageSpecError("no variant left to run")

    corpus = load_corpus(cfg.paths.data_path)
    run_seeds = [cfg.seed + i for i in range(seeds)]
    results = run_ablation(specs, corpus, cfg, run_seeds, out_dir)

    count = len(corpus.test)
    table_input = [(r.variant, r.records(count)) for r in results]
    (out_dir / "report.txt").write_text(
        ablation_report(table_input) + "\n", encoding="utf-8"
    )
    (out_dir / "report.md").write_text(
        ablation_report(table_input, tablefmt="github") + "\n", encoding="utf-8"
    )
    write_json([r.to_dict() for r in results], out_dir / "results.json")
    ManifestFile(out_dir / MANIFEST_FILE).merge(
        {
            "seeds": run_seeds,
            "config": cfg.to_dict(),
            "variants": [s.variant for s in specs],
        }
    )
    _record_invocation(out_dir / MANIFEST_FILE, "ablate", params)
    typer.echo(ablation_report(table_input))


COMMANDS: Dict[str, Callable[..., None]] = {
    "gen-data": gen_data,
    "train": train,
    "infer": infer,
    "eval": eval_cmd,
    "ablate": ablate,
}


@app.command()
def rerun(manifest: Path = typer.Argument(..., help="Manifest written by a command.")):
    """Repeat the command recorded in a manifest with the same parameters."""
    manifest = Path(manifest)
    if not manifest.is_file():
        raise ConfigError(f"Manifest {manifest} does not exist.")
    invocation = load_yaml(manifest).get("invocation")
    if not invocation or invocation.get("command") not in COMMANDS:
        raise ConfigError(f"Manifest {manifest} records no command to re-run.")
    typer.echo(f"Re-running {invocation['command']}")
    COMMANDS[invocation["command"]](**invocation["params"])


def main(argv: Optional[List[str]] = None) -> int:
    """
    Entry point of the console script.

    Returns:
        int: 0 on success, 1 for usage and configuration errors, 2 for
            failures while running.
    """
    try:
        result = app(args=argv, standalone_mode=False)
    except USAGE_ERRORS as e:
        typer.echo(f"Usage error: {e.format_message()}", err=True)
        return 1
    except (ConfigError, StageSpecError) as e:
        typer.echo(f"Configuration error: {e}", err=True)
        return 1
    except MMReasonError as e:
        typer.echo(f"Error: {e}", err=True)
        return 2
    except ABORT_ERRORS:
        typer.echo("Aborted.", err=True)
        return 2
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        typer.echo(f"Error: {type(e).__name__}: {e}", err=True)
        return 2
    return result if isinstance(result, int) else 0


if __name__ == "__main__":
    raise SystemExit(main())
