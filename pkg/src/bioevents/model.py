"""Multi-layer sequence labeling model for joint event extraction.

Per token: an encoder produces hidden states H; a trigger layer classifies
trigger/entity labels from h_i; the label embedding of each token's trigger
label is concatenated with h_i into its role representation r_i; a merging
layer summarizes the role rows of the token's candidate trigger words (up
to two predicted trigger mentions on each side) into a fixed-width vector
that is concatenated back onto h_i; theme and cause layers classify
directional argument labels from the merged representation.  The loss is
the sum of the three per-layer token-averaged cross-entropies.

Four merging strategies: ``none`` (arguments see only h_i), ``average``,
``attention`` (dot-product weights against r_i, excluding i itself), and
``self_attention`` (k heads with learned query/key/value projections over
the candidate role rows).  Tokens without candidates get a zero merged
vector under every strategy.

The model runs one sentence at a time in float64; batching is the
trainer's concern (gradient accumulation over sentences).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass
from typing import Sequence

import torch
from torch import nn

from .assembly import CAUSE, THEME
from .codec import LabelFrame, LabelSchema, TokenizedSentence, canon_entity_label, event_trigger_runs
from .errors import LengthMismatch, SequenceTooLong, ShapeMismatch
from .vocab import SubwordVocab

STRATEGIES = ("none", "average", "attention", "self_attention")


@dataclass
class ModelConfig:
    """Architecture knobs; ``d_h`` defaults to ``d`` when unset."""

    d: int = 32
    strategy: str = "self_attention"
    k: int = 1
    d_h: int | None = None
    vocab_size: int = 0
    dropout: float = 0.3
    layer_dropout: float = 0.1
    max_len: int = 512
    encoder: str = "toy"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.k < 1:
            raise ValueError("head count k must be >= 1")

    @property
    def head_size(self) -> int:
        return self.d_h if self.d_h is not None else self.d

    @property
    def merged_width(self) -> int:
        """Width of m_i fed to the theme/cause layers."""
        if self.strategy == "none":
            return self.d
        if self.strategy in ("average", "attention"):
            return self.d + 2 * self.d
        return self.d + self.k * self.head_size


class TokenEncoder(nn.Module):
    """Maps a token id sequence (n,) to hidden states (n, d)."""

    d: int
    max_len: int

    def encode(self, ids: torch.Tensor) -> torch.Tensor:
        if len(ids) > self.max_len:
            raise SequenceTooLong(f"{len(ids)} tokens exceeds maximum {self.max_len}")
        return self(ids)


class ToyEncoder(TokenEncoder):
    """Small trainable encoder: embedding lookup mixed over a +-1 window.

    h_i = tanh(W [e_{i-1}; e_i; e_{i+1}]), zero-padded at the edges.  The
    receptive field is deliberately local so that long-range trigger
    information must flow through the merging layer.
    """

    def __init__(self, vocab_size: int, d: int, layer_dropout: float = 0.1, max_len: int = 512):
        super().__init__()
        self.d = d
        self.max_len = max_len
        self.emb = nn.Embedding(vocab_size, d)
        self.mix = nn.Linear(3 * d, d)
        self.drop = nn.Dropout(layer_dropout)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        e = self.drop(self.emb(ids))
        pad = e.new_zeros((1, e.shape[1]))
        left = torch.cat([pad, e[:-1]], dim=0)
        right = torch.cat([e[1:], pad], dim=0)
        return torch.tanh(self.mix(torch.cat([left, e, right], dim=1)))


class PretrainedEncoder(TokenEncoder):
    """Optional plug-in wrapping a Hugging Face transformer encoder.

    Requires the ``transformers`` package and a vocabulary aligned with the
    wrapped model's tokenizer (the token ids are passed through verbatim).
    """

    def __init__(self, name: str, max_len: int = 512):
        super().__init__()
        try:
            from transformers import AutoModel
        except ImportError as exc:
            raise ImportError(
                "the pretrained encoder needs the optional 'transformers' dependency"
            ) from exc
        self.inner = AutoModel.from_pretrained(name)
        self.d = self.inner.config.hidden_size
        self.max_len = min(max_len, self.inner.config.max_position_embeddings)

    def forward(self, ids: torch.Tensor) -> torch.Tensor:
        out = self.inner(input_ids=ids.unsqueeze(0))
        return out.last_hidden_state.squeeze(0).to(ids.device)


def build_candidates(trigger_labels: Sequence[str]) -> list[list[int]]:
    """Candidate token sets C_i: for each token, the member tokens of up to
    two predicted trigger mentions strictly to its left and two strictly to
    its right.  A mention containing the token itself contributes nothing."""
    runs = event_trigger_runs(trigger_labels)
    out: list[list[int]] = []
    for i in range(len(trigger_labels)):
        left = [r for r in runs if r[1] < i][-2:]
        right = [r for r in runs if r[0] > i][:2]
        out.append([t for f, l, _ in left + right for t in range(f, l + 1)])
    return out


# --------------------------------------------------------------------------
# merging strategies (merged parts only; the model concatenates h_i back on)


def merge_average(R: torch.Tensor, cands: list[list[int]]) -> torch.Tensor:
    """Mean of candidate role rows; zero row when C_i is empty."""
    rows = []
    for C in cands:
        if C:
            rows.append(R[C].mean(dim=0))
        else:
            rows.append(R.new_zeros(R.shape[1]))
    return torch.stack(rows)


def merge_attention(R: torch.Tensor, cands: list[list[int]]) -> torch.Tensor:
    """Dot-product attention of r_i over candidate rows r_j, j != i."""
    rows = []
    for i, C in enumerate(cands):
        C = [j for j in C if j != i]
        if C:
            scores = R[C] @ R[i]
            weights = torch.softmax(scores, dim=0)
            rows.append(weights @ R[C])
        else:
            rows.append(R.new_zeros(R.shape[1]))
    return torch.stack(rows)


def merge_self_attention(
    R: torch.Tensor,
    cands: list[list[int]],
    W_Q: torch.Tensor,
    W_K: torch.Tensor,
    W_V: torch.Tensor,
) -> torch.Tensor:
    """Multi-head scaled dot-product attention over candidate role rows.

    ``W_Q``, ``W_K``, ``W_V`` have shape (k, d_h, role width); per head,
    scores are (W_K R_C)^T (W_Q r_i) / sqrt(d_h) over the candidate columns
    and the head output is the weighted sum of W_V-projected candidates.
    Head outputs are concatenated; empty C_i yields a zero row.
    """
    if W_Q.shape != W_K.shape or W_Q.shape != W_V.shape:
        raise ShapeMismatch(f"head projections disagree: {W_Q.shape} {W_K.shape} {W_V.shape}")
    if W_Q.shape[2] != R.shape[1]:
        raise ShapeMismatch(
            f"projection width {W_Q.shape[2]} != role row width {R.shape[1]}"
        )
    k, d_h, _ = W_Q.shape
    scale = math.sqrt(d_h)
    rows = []
    for i, C in enumerate(cands):
        if not C:
            rows.append(R.new_zeros(k * d_h))
            continue
        RC = R[C].T  # width x |C_i|
        heads = []
        for h in range(k):
            q = W_Q[h] @ R[i]
            scores = (W_K[h] @ RC).T @ q / scale
            weights = torch.softmax(scores, dim=0)
            heads.append((W_V[h] @ RC) @ weights)
        rows.append(torch.cat(heads))
    return torch.stack(rows)


@dataclass
class ModelOutput:
    """Per-sentence forward results."""

    H: torch.Tensor
    P_trigger: torch.Tensor
    P_theme: torch.Tensor
    P_cause: torch.Tensor
    pred_trigger: torch.Tensor  # argmax of P_trigger
    role_trigger: torch.Tensor  # labels the role layer used (entity-overridden)
    candidates: list[list[int]]


class TaggerModel(nn.Module):
    """Encoder + trigger layer + merging layer + theme/cause layers."""

    def __init__(
        self,
        config: ModelConfig,
        schema: LabelSchema,
        encoder: TokenEncoder | None = None,
    ):
        super().__init__()
        self.config = config
        self.schema = schema
        if encoder is None:
            encoder = ToyEncoder(
                config.vocab_size, config.d, config.layer_dropout, config.max_len
            )
        if encoder.d != config.d:
            raise ShapeMismatch(f"encoder width {encoder.d} != configured d {config.d}")
        self.encoder = encoder
        d, m = config.d, config.merged_width
        n_tr = schema.num_trigger_labels
        self.label_emb = nn.Embedding(n_tr, d)
        self.trigger_head = nn.Linear(d, n_tr)
        self.theme_head = nn.Linear(m, schema.num_arg_labels)
        self.cause_head = nn.Linear(m, schema.num_arg_labels)
        if config.strategy == "self_attention":
            shape = (config.k, config.head_size, 2 * d)
            scale = 1.0 / math.sqrt(2 * d)
            self.W_Q = nn.Parameter(torch.randn(shape) * scale)
            self.W_K = nn.Parameter(torch.randn(shape) * scale)
            self.W_V = nn.Parameter(torch.randn(shape) * scale)
        self.drop = nn.Dropout(config.dropout)
        # entity-label override table built lazily against the schema
        self._entity_label_ids = {
            e: schema.trigger_id(f"B-{e}") for e in schema.entity_labels
        }
        self.to(torch.float64)

    # ------------------------------------------------------------------
    # layers

    def trigger_forward(self, H: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        logits = self.trigger_head(self.drop(H))
        P = torch.softmax(logits, dim=-1)
        return P, logits.argmax(dim=-1)

    def role_label_ids(
        self, sent: TokenizedSentence, trigger_ids: torch.Tensor
    ) -> torch.Tensor:
        """Trigger labels as the role layer sees them: given entity mentions
        override whatever the trigger layer predicted for their tokens."""
        ids = trigger_ids.clone()
        for i, mention in sent.masks.items():
            label_id = self._entity_label_ids.get(canon_entity_label(mention.etype))
            if label_id is not None:
                ids[i] = label_id
        return ids

    def role_representation(self, H: torch.Tensor, label_ids: torch.Tensor) -> torch.Tensor:
        return torch.cat([self.label_emb(label_ids), H], dim=1)

    def merge(self, H: torch.Tensor, R: torch.Tensor, cands: list[list[int]]) -> torch.Tensor:
        s = self.config.strategy
        if s == "none":
            return H
        if s == "average":
            part = merge_average(R, cands)
        elif s == "attention":
            part = merge_attention(R, cands)
        else:
            part = merge_self_attention(R, cands, self.W_Q, self.W_K, self.W_V)
        return torch.cat([H, part], dim=1)

    def arg_forward(self, M: torch.Tensor, which: str) -> tuple[torch.Tensor, torch.Tensor]:
        head = self.theme_head if which == THEME else self.cause_head
        if M.shape[1] != head.in_features:
            raise ShapeMismatch(
                f"merged width {M.shape[1]} != classifier input {head.in_features}"
            )
        logits = head(self.drop(M))
        P = torch.softmax(logits, dim=-1)
        return P, logits.argmax(dim=-1)

    # ------------------------------------------------------------------
    # end to end

    def forward(
        self, sent: TokenizedSentence, gold_trigger_ids: torch.Tensor | None = None
    ) -> ModelOutput:
        """Run all layers on one sentence.

        When ``gold_trigger_ids`` is given (training), the role and merging
        layers are built from those labels; otherwise from the trigger
        layer's own predictions (inference).
        """
        ids = torch.as_tensor(sent.ids, dtype=torch.long)
        H = self.encoder.encode(ids)
        P_tr, pred = self.trigger_forward(H)
        base = gold_trigger_ids if gold_trigger_ids is not None else pred
        role_ids = self.role_label_ids(sent, torch.as_tensor(base, dtype=torch.long))
        labels = [self.schema.trigger_labels[i] for i in role_ids.tolist()]
        cands = build_candidates(labels)
        if self.config.strategy == "none":
            M = H
        else:
            R = self.role_representation(H, role_ids)
            M = self.merge(H, R, cands)
        P_t, _ = self.arg_forward(M, THEME)
        P_c, _ = self.arg_forward(M, CAUSE)
        return ModelOutput(H, P_tr, P_t, P_c, pred, role_ids, cands)

    def loss(
        self,
        P_trigger: torch.Tensor,
        P_theme: torch.Tensor,
        P_cause: torch.Tensor,
        gold: tuple[Sequence[int], Sequence[int], Sequence[int]],
    ) -> torch.Tensor:
        """Sum of the three token-averaged cross-entropies."""
        total = None
        for P, ids in zip((P_trigger, P_theme, P_cause), gold):
            if len(P) != len(ids):
                raise LengthMismatch(f"{len(P)} probability rows vs {len(ids)} labels")
            g = torch.as_tensor(ids, dtype=torch.long)
            nll = -torch.log(P[torch.arange(len(g)), g]).mean()
            total = nll if total is None else total + nll
        return total

    @torch.no_grad()
    def predict_frame(self, sent: TokenizedSentence) -> LabelFrame:
        """Predicted label strings for one sentence (inference flow)."""
        out = self.forward(sent)
        trig = tuple(self.schema.trigger_labels[i] for i in out.role_trigger.tolist())
        theme = tuple(self.schema.arg_labels[i] for i in out.P_theme.argmax(dim=1).tolist())
        cause = tuple(self.schema.arg_labels[i] for i in out.P_cause.argmax(dim=1).tolist())
        return LabelFrame(trig, theme, cause)


# --------------------------------------------------------------------------
# accounting and persistence


def param_count(
    strategy: str,
    d: int,
    num_trigger_labels: int = 0,
    num_arg_labels: int = 9,
    d_h: int | None = None,
    k: int = 1,
    convention: str = "faithful",
) -> dict[str, int]:
    """Trainable-parameter breakdown per layer (encoder excluded).

    The merging entry counts the k head projection triples.  Under the
    ``faithful`` convention projections act on width-2d role rows; the
    ``paper`` convention counts them over width-d inputs (the published
    3 x 768^2 = 1,769,472 figure at d_h = d = 768).
    """
    if convention not in ("faithful", "paper"):
        raise ValueError(f"unknown convention {convention!r}")
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    d_h = d_h if d_h is not None else d
    role_width = d if convention == "paper" else 2 * d
    merging = k * 3 * d_h * role_width if strategy == "self_attention" else 0
    cfg = ModelConfig(d=d, strategy=strategy, k=k, d_h=d_h, vocab_size=1)
    m = cfg.merged_width
    return {
        "label_embeddings": num_trigger_labels * d,
        "trigger": d * num_trigger_labels + num_trigger_labels,
        "merging": merging,
        "theme": m * num_arg_labels + num_arg_labels,
        "cause": m * num_arg_labels + num_arg_labels,
    }


def vocab_hash(vocab: SubwordVocab) -> str:
    payload = ("1" if vocab.lower else "0") + "\n" + "\n".join(vocab.pieces)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def save_checkpoint(path, model: TaggerModel, vocab: SubwordVocab | None = None) -> None:
    payload = {
        "config": asdict(model.config),
        "schema": model.schema.to_json(),
        "vocab_hash": vocab_hash(vocab) if vocab is not None else None,
        "state": model.state_dict(),
    }
    torch.save(payload, path)


def load_checkpoint(
    path, vocab: SubwordVocab | None = None, encoder: TokenEncoder | None = None
) -> TaggerModel:
    """Rebuild a model from a checkpoint, verifying shape and vocabulary
    consistency; raises :class:`ShapeMismatch` on any incompatibility."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    config = ModelConfig(**payload["config"])
    schema = LabelSchema.from_json(payload["schema"])
    if vocab is not None and payload["vocab_hash"] is not None:
        if vocab_hash(vocab) != payload["vocab_hash"]:
            raise ShapeMismatch("vocabulary does not match the checkpoint's hash")
    model = TaggerModel(config, schema, encoder=encoder)
    try:
        model.load_state_dict(payload["state"])
    except RuntimeError as exc:
        raise ShapeMismatch(f"checkpoint incompatible with configuration: {exc}") from None
    return model


def seed_everything(seed: int) -> None:
    """One seed for python, numpy and torch RNGs."""
    import random

    import numpy as np

    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)
