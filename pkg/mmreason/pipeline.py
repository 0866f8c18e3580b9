"""
Training and inference of the stages, and single runs of a variant.

The two-stage procedure trains a rationale model (question, context and
options to rationale) and an answer model (the same input plus the gold
rationale to answer) independently. At inference the answer model reads
the rationale generated by the first model instead of the gold one.
One-stage variants train a single model for one input format.
"""
import logging
import re
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import attrs
import numpy as np
from more_itertools import chunked

from .config import RunConfig
from .data.corpus import Corpus, sample_features
from .data.features import VisionFeatures
from .data.render import LETTERS, render_input, render_target
from .data.sample import InputFormat, Sample
from .data.synthetic import audit_rationale
from .data.vocab import EOS, build_corpus_vocabulary, tokenize
from .eval import (
    MetricRecord,
    abstain_record,
    accuracy_record,
    mean_rouge_l,
)
from .exceptions import (
    ConfigError,
    IncompatibleCheckpointError,
    NonFiniteLossError,
    StageSpecError,
)
from .model import (
    Checkpoint,
    Example,
    ModelSummary,
    ReasoningModel,
    checkpoint_from_model,
    config_diff,
    load_checkpoint,
    model_from_checkpoint,
    save_checkpoint,
)
from .settings import ManifestFile
from .tensor import AdamW, backward
from .utils import seed_streams, write_json, write_jsonl

logger = logging.getLogger(__name__)

CheckpointLike = Union[Checkpoint, Path, str]

_ANSWER_RE = re.compile(r"answer\s+is\s*\(\s*([a-z])\s*\)", re.IGNORECASE)
_ANSWER_SENTENCE_RE = re.compile(
    r"the\s+answer\s+is\s*\(\s*[a-z]\s*\)\s*\.?", re.IGNORECASE
)


class Stage(str, Enum):
    RATIONALE = "rationale"
    ANSWER = "answer"
    ONE_STAGE = "one"


ONE_STAGE_FORMATS = (InputFormat.QCM_A, InputFormat.QCM_RA, InputFormat.QCM_AR)


@attrs.frozen()
class StageSpec:
    """
    What a model is trained for.

    Args:
        stage (Stage): Rationale stage, answer stage or a one-stage model.
        format (InputFormat): QCM_R for the rationale stage, QCMR_A for the
            answer stage, one of QCM_A, QCM_RA, QCM_AR for one stage.
        use_vision (bool): False feeds all-zero vision features.
    """

    stage: Stage = attrs.field(converter=Stage)
    format: InputFormat = attrs.field(converter=InputFormat)
    use_vision: bool = True

    def __attrs_post_init__(self):
        if self.stage == Stage.RATIONALE and self.format != InputFormat.QCM_R:
            raise StageSpecError(
                f"rationale stage needs format QCM_R, got {self.format.value}"
            )
        if self.stage == Stage.ANSWER and self.format != InputFormat.QCMR_A:
            raise StageSpecError(
                f"answer stage needs format QCMR_A, got {self.format.value}"
            )
        if self.stage == Stage.ONE_STAGE and self.format not in ONE_STAGE_FORMATS:
            raise StageSpecError(
                f"one-stage format must be one of "
                f"{[f.value for f in ONE_STAGE_FORMATS]}, got {self.format.value}"
            )

    @classmethod
    def parse(cls, text: str, use_vision: bool = True) -> "StageSpec":
        """Parse 'rationale', 'answer' or 'one:FORMAT'."""
        text = text.strip()
        if text == Stage.RATIONALE.value:
            return cls(Stage.RATIONALE, InputFormat.QCM_R, use_vision)
        elif text == Stage.ANSWER.value:
            return cls(Stage.ANSWER, InputFormat.QCMR_A, use_vision)
        elif text.startswith("one:"):
            name = text[len("one:") :].upper()
            if name not in InputFormat.__members__:
                raise StageSpecError(f"unknown format '{name}'")
            return cls(Stage.ONE_STAGE, InputFormat[name], use_vision)
        else:
            raise StageSpecError(
                f"stage must be 'rationale', 'answer' or 'one:FORMAT', got '{text}'"
            )

    @property
    def name(self) -> str:
        if self.stage == Stage.ONE_STAGE:
            return f"one:{self.format.value}"
        return self.stage.value

    @property
    def variant(self) -> str:
        """Name of the run variant, e.g. 'two-stage (vision)'."""
        base = "two-stage" if self.stage == Stage.ANSWER else self.name
        return f"{base} ({'vision' if self.use_vision else 'no-vision'})"

    @property
    def has_rationale(self) -> bool:
        return self.format in (
            InputFormat.QCM_R,
            InputFormat.QCM_RA,
            InputFormat.QCM_AR,
        )

    @property
    def has_answer(self) -> bool:
        return self.format != InputFormat.QCM_R

    def with_stage(self, text: str) -> "StageSpec":
        return StageSpec.parse(text, self.use_vision)


def extract_answer(generated: str, n_options: int) -> Optional[int]:
    """
    Find the answer stated in generated text.

    Args:
        generated (str): Model output.
        n_options (int): Number of options, 2 to 5.

    Returns:
        Optional[int]: Index of the last 'answer is (X)' whose letter is one of
            the first `n_options`, case-insensitive; None if there is none.
    """
    if not 2 <= n_options <= len(LETTERS):
        raise ValueError(f"n_options must lie in [2, {len(LETTERS)}], got {n_options}")
    valid = LETTERS[:n_options]
    found = [m.group(1).upper() for m in _ANSWER_RE.finditer(generated)]
    found = [letter for letter in found if letter in valid]
    return valid.index(found[-1]) if found else None


def strip_answer(text: str) -> str:
    """Remove answer sentences, leaving the rationale part of an output."""
    return " ".join(_ANSWER_SENTENCE_RE.sub(" ", text).split())


def make_example(
    sample: Sample,
    spec: StageSpec,
    model: ReasoningModel,
    features: Mapping[str, VisionFeatures],
) -> Example:
    """Training example of a sample; the answer stage reads the gold rationale."""
    rationale = sample.rationale if spec.format == InputFormat.QCMR_A else None
    cfg = model.config
    return Example(
        input_ids=tokenize(render_input(sample, spec.format, rationale), model.vocab),
        features=sample_features(sample, features, (cfg.m, cfg.d_v), spec.use_vision),
        target_ids=tokenize(render_target(sample, spec.format), model.vocab) + [EOS],
    )


@attrs.frozen()
class Prediction:
    """
    Output of a predictor for one sample.

    Args:
        id (str): Sample id.
        output (str): Final generated text.
        rationale (Optional[str]): Generated rationale, if the variant makes one.
        answer_index (Optional[int]): Extracted answer; None for an abstention
            or a variant without answers.
    """

    id: str
    output: str
    rationale: Optional[str] = None
    answer_index: Optional[int] = None

    @property
    def answer_letter(self) -> Optional[str]:
        return LETTERS[self.answer_index] if self.answer_index is not None else None

    def to_record(self) -> Dict[str, Any]:
        return dict(
            id=self.id, rationale=self.rationale, answer_letter=self.answer_letter
        )


def _as_checkpoint(ckpt: CheckpointLike) -> Checkpoint:
    return ckpt if isinstance(ckpt, Checkpoint) else load_checkpoint(Path(ckpt))


class OneStagePredictor:
    """
    Predict with a single checkpoint of a one-stage or rationale model.

    Args:
        ckpt (CheckpointLike): Checkpoint or its path.
    """

    def __init__(self, ckpt: CheckpointLike):
        self.ckpt = _as_checkpoint(ckpt)
        self.spec = spec_of(self.ckpt)
        if self.spec.stage == Stage.ANSWER:
            raise StageSpecError(
                "an answer-stage checkpoint needs a rationale checkpoint"
            )
        self.model = model_from_checkpoint(self.ckpt)

    def predict(
        self, sample: Sample, features: Mapping[str, VisionFeatures]
    ) -> Prediction:
        cfg = self.model.config
        feats = sample_features(
            sample, features, (cfg.m, cfg.d_v), self.spec.use_vision
        )
        ids = tokenize(render_input(sample, self.spec.format), self.model.vocab)
        text = self.model.generate_greedy(ids, feats, cfg.n_max).text
        if self.spec.format == InputFormat.QCM_R:
            return Prediction(sample.id, text, rationale=text)
        answer = extract_answer(text, sample.n_options)
        rationale = strip_answer(text) if self.spec.has_rationale else None
        return Prediction(sample.id, text, rationale=rationale, answer_index=answer)


class TwoStagePredictor:
    """
    Rationale generation followed by answer inference.

    Both checkpoints are loaded once; `predict` serves any number of samples.

    Args:
        ckpt_stage1 (CheckpointLike): Rationale model.
        ckpt_stage2 (CheckpointLike): Answer model.
    """

    def __init__(self, ckpt_stage1: CheckpointLike, ckpt_stage2: CheckpointLike):
        self.ckpt1 = _as_checkpoint(ckpt_stage1)
        self.ckpt2 = _as_checkpoint(ckpt_stage2)
        spec1, spec2 = spec_of(self.ckpt1), spec_of(self.ckpt2)
        if spec1.stage != Stage.RATIONALE or spec2.stage != Stage.ANSWER:
            raise StageSpecError(
                "expected a rationale and an answer checkpoint, "
                f"got {spec1.name} and {spec2.name}"
            )
        diff = config_diff(self.ckpt1, self.ckpt2)
        if diff:
            raise IncompatibleCheckpointError(diff)
        self.use_vision = spec1.use_vision
        self.rationale_model = model_from_checkpoint(self.ckpt1)
        self.answer_model = model_from_checkpoint(self.ckpt2)

    def generate_rationale(self, sample: Sample, feats: np.ndarray) -> str:
        model = self.rationale_model
        ids = tokenize(render_input(sample, InputFormat.QCM_R), model.vocab)
        return model.generate_greedy(ids, feats, model.config.n_max).text

    def _features(
        self, sample: Sample, features: Mapping[str, VisionFeatures]
    ) -> np.ndarray:
        cfg = self.rationale_model.config
        return sample_features(sample, features, (cfg.m, cfg.d_v), self.use_vision)

    def predict(
        self, sample: Sample, features: Mapping[str, VisionFeatures]
    ) -> Prediction:
        feats = self._features(sample, features)
        rationale = self.generate_rationale(sample, feats)
        if rationale == "":
            logger.warning(f"Empty rationale generated for sample '{sample.id}'")
        return self._answer(sample, feats, rationale)

    def answer_with(
        self, sample: Sample, features: Mapping[str, VisionFeatures], rationale: str
    ) -> Prediction:
        """Answer from a given rationale, e.g. the gold one."""
        return self._answer(sample, self._features(sample, features), rationale)

    def _answer(self, sample: Sample, feats: np.ndarray, rationale: str) -> Prediction:
        model = self.answer_model
        ids = tokenize(render_input(sample, InputFormat.QCMR_A, rationale), model.vocab)
        text = model.generate_greedy(ids, feats, model.config.n_max).text
        answer = extract_answer(text, sample.n_options)
        if answer is None:
            logger.warning(f"No answer extractable for sample '{sample.id}'")
        return Prediction(sample.id, text, rationale=rationale, answer_index=answer)


def infer_two_stage(
    sample: Sample,
    features: Mapping[str, VisionFeatures],
    ckpt_stage1: CheckpointLike,
    ckpt_stage2: CheckpointLike,
) -> Prediction:
    """Run both stages on one sample. See `TwoStagePredictor` for many samples."""
    return TwoStagePredictor(ckpt_stage1, ckpt_stage2).predict(sample, features)


def spec_of(ckpt: Checkpoint) -> StageSpec:
    """The stage spec recorded in a checkpoint."""
    try:
        return StageSpec.parse(
            ckpt.metadata["stage"], bool(ckpt.metadata["use_vision"])
        )
    except KeyError as e:
        raise StageSpecError(f"checkpoint does not record its {e.args[0]}") from e


def _validation_metric(
    model: ReasoningModel,
    spec: StageSpec,
    samples: Sequence[Sample],
    features: Mapping[str, VisionFeatures],
) -> float:
    """Accuracy for answer-bearing formats, mean RougeL for rationales."""
    cfg = model.config
    candidates, references, predictions = [], [], []
    for sample in samples:
        rationale = sample.rationale if spec.format == InputFormat.QCMR_A else None
        ids = tokenize(render_input(sample, spec.format, rationale), model.vocab)
        feats = sample_features(sample, features, (cfg.m, cfg.d_v), spec.use_vision)
        text = model.generate_greedy(ids, feats, cfg.n_max).text
        if spec.has_answer:
            predictions.append(extract_answer(text, sample.n_options))
        else:
            candidates.append(text)
            references.append(sample.rationale or "")
    if spec.has_answer:
        return accuracy_record(predictions, [s.answer_index for s in samples]).value
    return mean_rouge_l(candidates, references).value


def build_model(
    config: RunConfig, train_samples: Sequence[Sample], seed: int
) -> ReasoningModel:
    """Fresh model whose vocabulary comes from the training samples."""
    vocab = build_corpus_vocabulary(train_samples)
    streams = seed_streams(seed)
    model_cfg = attrs.evolve(config.model, vocab_size=len(vocab))
    return ReasoningModel(model_cfg, vocab, streams["init"], streams["dropout"])


def train_stage(
    spec: StageSpec,
    train_samples: Sequence[Sample],
    features: Mapping[str, VisionFeatures],
    config: RunConfig,
    seed: int,
    out_dir: Path,
    val_samples: Sequence[Sample] = (),
) -> Path:
    """
    Train one model and write its best checkpoint.

    Every epoch the mean training loss and a validation metric (accuracy, or
    RougeL for the rationale stage) are appended to `train_log.jsonl`.
    Training stops after `config.optim.epochs` epochs or when the validation
    metric has not improved for `config.optim.patience` epochs; the
    parameters of the best epoch are kept.

    Args:
        spec (StageSpec): What to train. The answer stage reads gold rationales.
        train_samples (Sequence[Sample]): Training samples.
        features (Mapping[str, VisionFeatures]): Features by image id.
        config (RunConfig): Model and optimizer settings.
        seed (int): Master seed of initialization, shuffling and dropout.
        out_dir (Path): Directory of the checkpoint and the log.
        val_samples (Sequence[Sample]): Validation samples; without them the
            negative training loss serves as validation metric.

    Returns:
        Path: The checkpoint file.
    """
    if len(train_samples) == 0:
        raise ConfigError("no training samples")
    shape = (config.model.m, config.model.d_v)
    if features and (found := next(iter(features.values())).shape) != shape:
        raise ConfigError(f"features have shape {found}, config expects {shape}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "train_log.jsonl"
    ckpt_path = out_dir / f"{spec.stage.value}.mmck"

    optim = config.optim
    model = build_model(config, train_samples, seed)
    shuffle_rng = seed_streams(seed)["shuffle"]
    optimizer = AdamW(
        dict(model.named_parameters()),
        lr=optim.lr,
        betas=optim.betas,
        eps=optim.eps,
        weight_decay=optim.weight_decay,
    )
    examples = [make_example(s, spec, model, features) for s in train_samples]
    val_subset = list(val_samples)[: optim.val_limit]
    logger.info(
        f"Training {spec.variant} on {len(examples)} samples, "
        f"vocabulary of {len(model.vocab)} tokens, "
        f"{ModelSummary.of(model).n_parameters} parameters"
    )

    log: List[Dict[str, Any]] = []
    best_metric, best_epoch = -np.inf, 0
    best_state = {name: data.copy() for name, data in model.state_dict().items()}
    stale = 0
    for epoch in range(1, optim.epochs + 1):
        model.train()
        losses = []
        order = shuffle_rng.permutation(len(examples))
        for step, batch_idx in enumerate(chunked(order, optim.batch_size)):
            batch = [examples[i] for i in batch_idx]
            optimizer.zero_grad()
            loss = model.batch_loss(batch)
            if not np.isfinite(loss.item()):
                raise NonFiniteLossError(
                    f"non-finite loss {loss.item()} in epoch {epoch}, step {step} "
                    f"(lr={optim.lr}, "
                    f"samples {[train_samples[i].id for i in batch_idx]})"
                )
            backward(loss)
            optimizer.step()
            if not model.all_finite():
                raise NonFiniteLossError(
                    f"parameters became non-finite in epoch {epoch}, step {step} "
                    f"(lr={optim.lr})"
                )
            losses.append(loss.item())
            logger.debug(f"epoch {epoch} step {step} loss {loss.item():.4f}")

        train_loss = float(np.mean(losses))
        model.eval()
        if val_subset:
            metric = _validation_metric(model, spec, val_subset, features)
            metric_name = "accuracy" if spec.has_answer else "rougeL"
        else:
            metric, metric_name = -train_loss, "neg_train_loss"
        log.append(
            dict(
                epoch=epoch,
                train_loss=train_loss,
                val_metric=metric,
                val_metric_name=metric_name,
            )
        )
        write_jsonl(log, log_path)
        logger.info(
            f"epoch {epoch}: train loss {train_loss:.4f}, "
            f"val {metric_name} {metric:.4f}"
        )

        if metric > best_metric:
            best_metric, best_epoch, stale = metric, epoch, 0
            best_state = {
                name: data.copy() for name, data in model.state_dict().items()
            }
        else:
            stale += 1
            if stale >= optim.patience:
                logger.info(
                    f"Stopping early after epoch {epoch}, best epoch {best_epoch}"
                )
                break

    model.load_state_dict(best_state)
    metadata = dict(
        stage=spec.name,
        use_vision=spec.use_vision,
        seed=seed,
        epochs_run=len(log),
        best_epoch=best_epoch,
        best_val_metric=float(best_metric),
        final_train_loss=log[-1]["train_loss"],
        truncated_inputs=model.truncated_inputs,
    )
    save_checkpoint(checkpoint_from_model(model, metadata), ckpt_path)
    return ckpt_path


@attrs.frozen()
class RunMetrics:
    """
    Metrics of one run of a variant. Metrics a variant does not produce are None.

    Args:
        variant (str): e.g. 'two-stage (vision)'.
        seed (int): Master seed of the run.
        accuracy (Optional[float]): Answer accuracy on the test split.
        rougeL (Optional[float]): Mean RougeL of generated against gold rationales.
        abstain_rate (Optional[float]): Share of test samples without an
            extractable answer.
        epochs_run (int): Epochs trained, summed over the stages.
        hallucination_rate (Optional[float]): Share of generated rationales
            stating a false or no fact about the image.
    """

    variant: str
    seed: int
    accuracy: Optional[float]
    rougeL: Optional[float]
    abstain_rate: Optional[float]
    epochs_run: int
    hallucination_rate: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return attrs.asdict(self)

    def records(self, count: int) -> List[MetricRecord]:
        """The metrics as records, for reports."""
        values = dict(
            accuracy=self.accuracy, rougeL=self.rougeL, abstain_rate=self.abstain_rate
        )
        return [
            MetricRecord(name, value, count)
            for name, value in values.items()
            if value is not None
        ]


@attrs.frozen()
class RunManifest:
    """
    Everything needed to re-run a variant.

    Args:
        seed (int): Master seed.
        config (Dict[str, Any]): Snapshot of the run configuration.
        spec (Dict[str, Any]): Stage name and vision flag.
        data_dir (Optional[str]): Directory of the corpus.
        checkpoints (Dict[str, str]): Checkpoint file per stage.
        metrics (str): Metrics file.
    """

    seed: int
    config: Dict[str, Any]
    spec: Dict[str, Any]
    data_dir: Optional[str]
    checkpoints: Dict[str, str]
    metrics: str

    def write(self, path: Path) -> Path:
        manifest = ManifestFile(path)
        manifest.merge({"command": "run", **attrs.asdict(self)})
        return path


def predict_all(predictor, samples: Sequence[Sample], features) -> List[Prediction]:
    return [predictor.predict(sample, features) for sample in samples]


def hallucination_rate(
    predictions: Sequence[Prediction],
    samples: Sequence[Sample],
    features: Mapping[str, VisionFeatures],
    n_colors: int,
) -> Optional[float]:
    """Share of predictions whose rationale fails the fact audit."""
    audited = [
        not audit_rationale(p.rationale, s, features.get(s.image_id or ""), n_colors)
        for p, s in zip(predictions, samples)
        if p.rationale is not None
    ]
    return float(np.mean(audited)) if audited else None


def run_variant(
    spec: StageSpec,
    corpus: Corpus,
    config: RunConfig,
    seed: int,
    out_dir: Path,
) -> RunMetrics:
    """
    Train and evaluate one variant on the test split.

    A one-stage spec trains that model. A rationale spec trains the rationale
    stage alone and reports RougeL. An answer spec runs the full two-stage
    procedure: both stages are trained, then the answer model reads
    generated rationales.

    Writes `metrics.json`, `predictions.jsonl` and `manifest.yaml` to `out_dir`.

    Args:
        spec (StageSpec): The variant.
        corpus (Corpus): Train, validation and test splits with features.
        config (RunConfig): Run configuration.
        seed (int): Master seed.
        out_dir (Path): Run directory.

    Returns:
        RunMetrics: The metrics, also written to `metrics.json`.
    """
    out_dir = Path(out_dir)
    features = corpus.features
    test = corpus.test
    if len(test) == 0:
        raise ConfigError("the test split is empty")

    checkpoints: Dict[str, Path] = {}
    if spec.stage == Stage.ANSWER:
        rationale_spec = spec.with_stage("rationale")
        checkpoints["rationale"] = train_stage(
            rationale_spec,
            corpus.train,
            features,
            config,
            seed,
            out_dir / "rationale",
            corpus.val,
        )
        checkpoints["answer"] = train_stage(
            spec, corpus.train, features, config, seed, out_dir / "answer", corpus.val
        )
        predictor: Any = TwoStagePredictor(
            checkpoints["rationale"], checkpoints["answer"]
        )
    else:
        checkpoints[spec.stage.value] = train_stage(
            spec,
            corpus.train,
            features,
            config,
            seed,
            out_dir / spec.stage.value,
            corpus.val,
        )
        predictor = OneStagePredictor(checkpoints[spec.stage.value])

    predictions = predict_all(predictor, test, features)
    golds = [s.answer_index for s in test]
    answers = [p.answer_index for p in predictions]
    epochs_run = sum(
        int(load_checkpoint(path).metadata["epochs_run"])
        for path in checkpoints.values()
    )

    rouge = None
    if spec.has_rationale or spec.stage == Stage.ANSWER:
        rouge = mean_rouge_l(
            [p.rationale or "" for p in predictions], [s.rationale or "" for s in test]
        ).value
    metrics = RunMetrics(
        variant=spec.variant,
        seed=seed,
        accuracy=accuracy_record(answers, golds).value if spec.has_answer else None,
        rougeL=rouge,
        abstain_rate=abstain_record(answers).value if spec.has_answer else None,
        epochs_run=epochs_run,
        hallucination_rate=hallucination_rate(
            predictions, test, features, config.data.n_colors
        ),
    )

    metrics_path = write_json(metrics.to_dict(), out_dir / "metrics.json")
    write_jsonl(
        [
            dict(p.to_record(), answer_index=p.answer_index, output=p.output)
            for p in predictions
        ],
        out_dir / "predictions.jsonl",
    )
    RunManifest(
        seed=seed,
        config=config.to_dict(),
        spec=dict(stage=spec.name, use_vision=spec.use_vision),
        data_dir=str(config.paths.data_path),
        checkpoints={stage: str(path) for stage, path in checkpoints.items()},
        metrics=str(metrics_path),
    ).write(out_dir / "manifest.yaml")
    logger.info(
        f"{metrics.variant} seed {seed}: "
        f"accuracy {metrics.accuracy}, rougeL {metrics.rougeL}"
    )
    return metrics


def ablation_grid(use_vision: Sequence[bool] = (True, False)) -> List[StageSpec]:
    """The variants compared by an ablation: three one-stage formats and two-stage."""
    stages = ["one:QCM_A", "one:QCM_RA", "one:QCM_AR", "answer"]
    return [StageSpec.parse(stage, vision) for vision in use_vision for stage in stages]


def variant_slug(spec: StageSpec) -> str:
    """File-system friendly variant name, e.g. 'one-qcm_ra-no-vision'."""
    base = spec.variant.replace(" (", "-").replace(")", "").replace(":", "-")
    return base.lower()


def run_ablation(
    specs: Sequence[StageSpec],
    corpus: Corpus,
    config: RunConfig,
    seeds: Sequence[int],
    out_dir: Path,
) -> List[RunMetrics]:
    """
    Run every variant with every seed, one after the other.

    Runs are independent; each writes into `out_dir/<variant>/seed-<seed>`.
    """
    results = []
    for spec in specs:
        for seed in seeds:
            run_dir = Path(out_dir) / variant_slug(spec) / f"seed-{seed}"
            results.append(run_variant(spec, corpus, config, seed, run_dir))
    return results
