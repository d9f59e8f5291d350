"""Two-pass training, classification, evaluation and model files.

Pass one classifies among all classes with a full-frame partition. When the
top choice falls in a group of classes that the coarse pass tends to mix up,
pass two re-decides among that group's members using features taken only
from the group's confusion region.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifier import (ClassModel, ConfusionMatrix, ModelSet, Prediction, accuracy, build_models,
                         classify, classify_batch, confusion)
from .evolution import EvolutionTrace, GAConfig, evolve
from .grouping import (GroupingConfig, GroupSpec, NoConfusionRegion, confusion_region, form_groups,
                       grow_region)
from .imaging import FULL_FRAME, DataError, LabeledSet, Rect, class_overlaps
from .partitions import Chromosome, FuzzyParams, extract_batch, feature_dim, validate

log = logging.getLogger(__name__)

FORMAT_VERSION = "fuzzygeno-1"


class ModelFormatError(ValueError):
    pass


@dataclass
class GroupModel:
    spec: GroupSpec
    models: ModelSet
    group_rate: float
    trace: EvolutionTrace | None = field(default=None, compare=False, repr=False)

    @property
    def members(self) -> tuple[int, ...]:
        return self.spec.members

    @property
    def chromosome(self) -> Chromosome:
        return self.models.chromosome


@dataclass
class TwoPassModel:
    fuzzy_params: FuzzyParams
    coarse: ModelSet
    groups: list[GroupModel] = field(default_factory=list)
    version: str = FORMAT_VERSION

    @property
    def labels(self) -> tuple[int, ...]:
        return self.coarse.labels

    def group_of(self, label: int) -> int | None:
        for i, g in enumerate(self.groups):
            if label in g.members:
                return i
        return None


@dataclass
class ClassificationTrace:
    coarse_prediction: Prediction
    group_used: tuple[int, ...] | None
    final_prediction: Prediction


@dataclass
class EvaluationReport:
    coarse_confusion: ConfusionMatrix
    final_confusion: ConfusionMatrix
    coarse_accuracy: Fraction
    final_accuracy: Fraction
    group_rates: dict[tuple[int, ...], Fraction]
    coarse_labels: np.ndarray
    final_labels: np.ndarray
    group_index: np.ndarray  # -1 where no group was used


# ----------------------------------------------------------------- training

def train_coarse(data: LabeledSet, cfg: GAConfig, fp: FuzzyParams):
    """Evolve a full-frame partition over all classes; returns (models, confusion, trace)."""
    best, trace = evolve(data, FULL_FRAME, cfg, fp)
    feats = extract_batch(data.images, best, fp)
    ms = build_models(feats, data.labels, best, fp)
    pred, _, _ = classify_batch(feats, ms)
    cm = confusion(zip(data.labels.tolist(), pred.tolist()), ms.labels)
    log.info("coarse pass: %s, resubstitution accuracy %.4f", best, float(accuracy(cm)))
    return ms, cm, trace


def group_seed(seed: int, members: Sequence[int]) -> int:
    state = np.random.SeedSequence([seed, *members]).generate_state(1, np.uint64)
    return int(state[0])


def train_group(data: LabeledSet, spec: GroupSpec, cfg: GAConfig, fp: FuzzyParams) -> GroupModel:
    sub = data.subset(spec.members)
    gcfg = replace(cfg, seed=group_seed(cfg.seed, spec.members))
    best, trace = evolve(sub, spec.region, gcfg, fp, allowed=spec.members)
    feats = extract_batch(sub.images, best, fp)
    ms = build_models(feats, sub.labels, best, fp)
    pred, _, _ = classify_batch(feats, ms, spec.members)
    rate = float(np.mean(pred == sub.labels))
    log.info("group %s in %s: %s, rate %.4f", spec.members, spec.region, best, rate)
    return GroupModel(spec, ms, rate, trace)


def resolve_groups(data: LabeledSet, cm: ConfusionMatrix, gcfg: GroupingConfig,
                   min_span: int, explicit=None) -> list[GroupSpec]:
    """Member sets and regions for pass two.

    ``explicit`` is a list of (members, region-or-None) that replaces the
    member sets found in ``cm``. Groups whose region cannot be located are
    dropped with a warning.
    """
    if explicit is None:
        explicit = [(members, None) for members in form_groups(cm, gcfg.pair_threshold)]
    specs = []
    for members, region in explicit:
        missing = set(members) - set(data.classes)
        if missing:
            raise DataError(f"group {members} names classes absent from the data: {sorted(missing)}")
        region = region or gcfg.override_for(members)
        if region is None:
            overlaps = class_overlaps(data, members)
            try:
                region = confusion_region(list(overlaps.values()), gcfg.region_threshold)
            except NoConfusionRegion:
                log.warning("group %s: no confusion region at threshold %g; dropped",
                            members, gcfg.region_threshold)
                continue
        grown = grow_region(region, min_span)
        if grown != region:
            log.info("group %s: region %s widened to %s", members, region, grown)
        specs.append(GroupSpec(tuple(members), grown))
    return specs


def train_groups(data: LabeledSet, cm: ConfusionMatrix, gcfg: GroupingConfig, cfg: GAConfig,
                 fp: FuzzyParams, explicit=None) -> list[GroupModel]:
    specs = resolve_groups(data, cm, gcfg, cfg.cut_bounds[0], explicit)
    return [train_group(data, spec, cfg, fp) for spec in specs]


def train(data: LabeledSet, cfg: GAConfig, fp: FuzzyParams, gcfg: GroupingConfig = GroupingConfig(),
          explicit_groups=None):
    """Both passes; returns (model, coarse confusion matrix, coarse trace)."""
    coarse, cm, trace = train_coarse(data, cfg, fp)
    groups = train_groups(data, cm, gcfg, cfg, fp, explicit_groups)
    return TwoPassModel(fp, coarse, groups), cm, trace


# ----------------------------------------------------------- classification

def classify_two_pass_batch(images: np.ndarray, model: TwoPassModel):
    """Coarse labels, final labels and the group index used (-1 for none)."""
    images = np.asarray(images, dtype=np.float64)
    coarse, _, _ = classify_batch(model.coarse.features(images), model.coarse)
    final = coarse.copy()
    used = np.full(len(images), -1)
    for i, g in enumerate(model.groups):
        routed = np.isin(coarse, g.members)
        if routed.any():
            pred, _, _ = classify_batch(g.models.features(images[routed]), g.models, g.members)
            final[routed] = pred
            used[routed] = i
    return coarse, final, used


def classify_two_pass(img: np.ndarray, model: TwoPassModel) -> ClassificationTrace:
    img = np.asarray(img, dtype=np.float64)[None]
    coarse = classify(model.coarse.features(img)[0], model.coarse)
    gi = model.group_of(coarse.label)
    if gi is None:
        return ClassificationTrace(coarse, None, coarse)
    g = model.groups[gi]
    final = classify(g.models.features(img)[0], g.models, g.members)
    return ClassificationTrace(coarse, g.members, final)


def evaluate(data: LabeledSet, model: TwoPassModel) -> EvaluationReport:
    unknown = set(data.classes) - set(model.labels)
    if unknown:
        raise DataError(f"labels absent from the model: {sorted(unknown)}")
    coarse, final, used = classify_two_pass_batch(data.images, model)
    truth = data.labels.tolist()
    cm1 = confusion(zip(truth, coarse.tolist()), model.labels)
    cm2 = confusion(zip(truth, final.tolist()), model.labels)
    rates = {}
    for g in model.groups:
        mask = np.isin(data.labels, g.members)
        if not mask.any():
            continue
        pred, _, _ = classify_batch(g.models.features(data.images[mask]), g.models, g.members)
        rates[g.members] = Fraction(int(np.sum(pred == data.labels[mask])), int(mask.sum()))
    return EvaluationReport(cm1, cm2, accuracy(cm1), accuracy(cm2), rates, coarse, final, used)


# ---------------------------------------------------------------- model I/O

def _models_doc(ms: ModelSet) -> dict:
    return {str(c): {"count": m.sample_count, "prototype": m.prototype.tolist()}
            for c, m in sorted(ms.models.items())}


def model_to_json(model: TwoPassModel) -> str:
    doc = {
        "version": model.version,
        "fuzzy_params": {"ramp": model.fuzzy_params.ramp},
        "coarse": {"chromosome": str(model.coarse.chromosome), "prototypes": _models_doc(model.coarse)},
        "groups": [{
            "members": list(g.members),
            "region": list(g.spec.region.as_tuple()),
            "chromosome": str(g.chromosome),
            "prototypes": _models_doc(g.models),
            "group_rate": g.group_rate,
        } for g in model.groups],
    }
    return json.dumps(doc, indent=1) + "\n"


def save_model(model: TwoPassModel, path: str | os.PathLike) -> None:
    Path(path).write_text(model_to_json(model), encoding="utf-8")


def _load_modelset(doc: dict, fp: FuzzyParams, where: str, region: Rect) -> ModelSet:
    ch = Chromosome.parse(doc["chromosome"])
    if ch.region != region:
        raise ModelFormatError(f"invalid model: {where} chromosome region {ch.region} is not {region}")
    problems = validate(ch, bounds=None)
    if problems:
        raise ModelFormatError(f"invalid model: {where} chromosome: {'; '.join(problems)}")
    dim = feature_dim(ch)
    models = {}
    for key, entry in doc["prototypes"].items():
        proto = np.array(entry["prototype"], dtype=np.float64)
        count = int(entry["count"])
        if proto.shape != (dim,):
            raise ModelFormatError(f"invalid model: {where} prototype {key} has {proto.size} values, expected {dim}")
        if not np.all((proto >= 0.0) & (proto <= 1.0)) or count < 1:
            raise ModelFormatError(f"invalid model: {where} prototype {key} out of range")
        models[int(key)] = ClassModel(int(key), proto, count)
    if not models:
        raise ModelFormatError(f"invalid model: {where} has no prototypes")
    return ModelSet(ch, fp, models)


def model_from_json(text: str) -> TwoPassModel:
    try:
        doc = json.loads(text)
        version = doc["version"]
    except (json.JSONDecodeError, KeyError, TypeError):
        raise ModelFormatError("malformed model file") from None
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"model version {version!r} is not {FORMAT_VERSION!r}")
    try:
        fp = FuzzyParams(int(doc["fuzzy_params"]["ramp"]))
        coarse = _load_modelset(doc["coarse"], fp, "coarse (full frame)", FULL_FRAME)
        groups = []
        for i, gdoc in enumerate(doc["groups"]):
            spec = GroupSpec(tuple(gdoc["members"]), Rect(*gdoc["region"]))
            ms = _load_modelset(gdoc, fp, f"group {i}", spec.region)
            groups.append(GroupModel(spec, ms, float(gdoc["group_rate"])))
    except ModelFormatError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from None
    seen: set[int] = set()
    for g in groups:
        if seen & set(g.members):
            raise ModelFormatError("invalid model: overlapping groups")
        seen |= set(g.members)
        if g.models.labels != g.members:
            raise ModelFormatError(f"invalid model: group {g.members} prototypes do not match its members")
        if not set(g.members) <= set(coarse.labels):
            raise ModelFormatError(f"invalid model: group {g.members} names unknown classes")
    return TwoPassModel(fp, coarse, groups, version)


def load_model(path: str | os.PathLike) -> TwoPassModel:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from None
    return model_from_json(text)
