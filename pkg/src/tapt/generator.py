"""IsingFormer: a decoder-only autoregressive model over spin tokens, conditioned on beta.

A configuration is read as a token sequence: the clamped spins first (the prefix,
in a fixed order), then the free spins in layout order. Token 1 is spin +1.
The logit at position ``t`` gives P(token_t = 1 | tokens_<t, beta); the input at
position ``t`` is the embedding of token ``t-1`` (nothing at ``t = 0``) plus a
sinusoidal positional code plus the beta embedding.

Autograd and the fused causal attention kernel come from torch; the masking
schedule, KV cache, beta embedding and masked loss are written out here.
"""

from __future__ import annotations

import copy
import io
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from sklearn.base import BaseEstimator
from torch import nn
from torch.nn import functional as F

from ._validation import check_count, check_fraction, check_random_state
from .exceptions import (
    DimensionError, DomainError, FormatError, LayoutError, SizeError, TrainingDivergedError,
)
from .mcmc import SampleDataset
from .spin_model import CouplingGraph

MAGIC = b"ISFW1"
FORMAT_VERSION = 1


# -- configuration ----------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorConfig:
    d_model: int = 64
    heads: int = 2
    ffn_dim: int = 128
    layers: int = 2
    max_sequence_length: int = 1024
    beta_frequencies: int = 8

    def __post_init__(self):
        for name in ("d_model", "heads", "ffn_dim", "max_sequence_length", "beta_frequencies"):
            check_count(getattr(self, name), name, minimum=1)
        # layers=0 is the linear-only toy model used by gradient checks
        check_count(self.layers, "layers", minimum=0)
        if self.d_model % self.heads:
            raise DomainError(f"d_model={self.d_model} is not divisible by heads={self.heads}")

    @property
    def beta_feature_dim(self) -> int:
        return 1 + 2 * self.beta_frequencies


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 50
    val_fraction: float = 0.1
    seed: int = 0
    patience: int | None = None

    def __post_init__(self):
        if not (self.lr > 0 and math.isfinite(self.lr)):
            raise DomainError(f"lr must be positive, got {self.lr}")
        check_count(self.batch_size, "batch_size", minimum=1)
        check_count(self.max_epochs, "max_epochs", minimum=1)
        check_fraction(self.val_fraction, "val_fraction", closed=False)
        if self.patience is not None:
            check_count(self.patience, "patience", minimum=1)


@dataclass(frozen=True)
class TokenLayout:
    """Bijection between spin indices and sequence positions.

    ``order[t]`` is the spin at position ``t``; the first ``n_prefix`` positions
    are the clamped spins.
    """

    n_spins: int
    prefix_idx: tuple[int, ...] = ()
    free_idx: tuple[int, ...] = ()

    def __post_init__(self):
        order = list(self.prefix_idx) + list(self.free_idx)
        if sorted(order) != list(range(self.n_spins)):
            raise LayoutError("prefix and free indices must partition range(n_spins)")

    @classmethod
    def for_graph(cls, graph: CouplingGraph, prefix_order: Sequence[int] | None = None) -> "TokenLayout":
        """Clamped spins form the prefix (ascending unless ``prefix_order`` is given)."""
        prefix = list(graph.clamp_idx) if prefix_order is None else [int(i) for i in prefix_order]
        if sorted(prefix) != sorted(int(i) for i in graph.clamp_idx):
            raise LayoutError("prefix_order must list exactly the clamped spins")
        return cls(graph.n_spins, tuple(prefix), tuple(int(i) for i in graph.free_idx))

    @property
    def n_prefix(self) -> int:
        return len(self.prefix_idx)

    @property
    def n_free(self) -> int:
        return len(self.free_idx)

    @property
    def order(self) -> np.ndarray:
        return np.array(self.prefix_idx + self.free_idx, dtype=np.int64)

    def to_tokens(self, S) -> np.ndarray:
        S = np.asarray(S)
        if S.shape[-1] != self.n_spins:
            raise LayoutError(f"expected {self.n_spins} spins, got {S.shape[-1]}")
        return (S[..., self.order] > 0).astype(np.int64)

    def to_spins(self, tokens) -> np.ndarray:
        tokens = np.asarray(tokens)
        out = np.empty(tokens.shape[:-1] + (self.n_spins,), dtype=np.int8)
        out[..., self.order] = np.where(tokens > 0, 1, -1)
        return out

    def check_graph(self, graph: CouplingGraph) -> None:
        if graph.n_spins != self.n_spins:
            raise LayoutError(f"generator expects {self.n_spins} spins, graph has {graph.n_spins}")
        if sorted(self.prefix_idx) != [int(i) for i in graph.clamp_idx]:
            raise LayoutError("graph clamps do not match the generator's prefix positions")


# -- the network ---------------------------------------------------------------------

def _sinusoidal_table(length: int, d: int) -> torch.Tensor:
    pos = torch.arange(length, dtype=torch.float64)[:, None]
    i = torch.arange(0, d, 2, dtype=torch.float64)
    angle = pos / torch.pow(10000.0, i / d)
    table = torch.zeros(length, d, dtype=torch.float64)
    table[:, 0::2] = torch.sin(angle)
    table[:, 1::2] = torch.cos(angle[:, : d // 2])
    return table


def beta_features(beta, n_freq: int) -> torch.Tensor:
    """Fixed features ``[beta, sin(w_k beta), cos(w_k beta)]`` with w_k geometric in [0.5, 8]."""
    beta = torch.as_tensor(beta, dtype=torch.float64).reshape(-1, 1)
    omega = torch.as_tensor(np.geomspace(0.5, 8.0, n_freq), dtype=torch.float64)
    ang = beta * omega
    return torch.cat([beta, torch.sin(ang), torch.cos(ang)], dim=1)


class _Block(nn.Module):
    def __init__(self, cfg: GeneratorConfig):
        super().__init__()
        d = cfg.d_model
        self.heads = cfg.heads
        self.ln1 = nn.LayerNorm(d)
        self.qkv = nn.Linear(d, 3 * d)
        self.proj = nn.Linear(d, d)
        self.ln2 = nn.LayerNorm(d)
        self.fc1 = nn.Linear(d, cfg.ffn_dim)
        self.fc2 = nn.Linear(cfg.ffn_dim, d)

    def forward(self, x, cache=None):
        B, n, d = x.shape
        h, dh = self.heads, d // self.heads
        q, k, v = self.qkv(self.ln1(x)).split(d, dim=2)
        q = q.view(B, n, h, dh).transpose(1, 2)
        k = k.view(B, n, h, dh).transpose(1, 2)
        v = v.view(B, n, h, dh).transpose(1, 2)
        if cache is not None:
            if cache.get("k") is not None:
                k = torch.cat([cache["k"], k], dim=2)
                v = torch.cat([cache["v"], v], dim=2)
            cache["k"], cache["v"] = k, v
        t0 = k.shape[2] - n
        if t0 == 0:
            y = F.scaled_dot_product_attention(q, k, v, is_causal=True)
        elif n == 1:
            # a single new query sees the whole cache
            y = F.scaled_dot_product_attention(q, k, v)
        else:
            keep = torch.arange(k.shape[2])[None, :] <= torch.arange(t0, t0 + n)[:, None]
            y = F.scaled_dot_product_attention(q, k, v, attn_mask=keep)
        x = x + self.proj(y.transpose(1, 2).reshape(B, n, d))
        return x + self.fc2(F.gelu(self.fc1(self.ln2(x))))


class IsingFormerNet(nn.Module):
    """Parameters plus architecture; ``forward`` maps (tokens, beta) to per-position logits."""

    def __init__(self, config: GeneratorConfig = GeneratorConfig(), layout: TokenLayout | None = None,
                 seed: int = 0):
        super().__init__()
        self.config = config
        self.layout = layout
        d = config.d_model
        self.tok_emb = nn.Embedding(2, d)
        self.beta_map = nn.Linear(config.beta_feature_dim, d)
        self.blocks = nn.ModuleList(_Block(config) for _ in range(config.layers))
        # with no blocks the logits are affine in the embeddings (linear-only toy config)
        self.ln_f = nn.LayerNorm(d) if config.layers else nn.Identity()
        self.head = nn.Linear(d, 1)
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            for mod in self.modules():
                if isinstance(mod, nn.Linear):
                    nn.init.normal_(mod.weight, std=0.02)
                    nn.init.zeros_(mod.bias)
                elif isinstance(mod, nn.Embedding):
                    nn.init.normal_(mod.weight, std=0.02)
        # untrained model is the uniform distribution
        nn.init.zeros_(self.head.weight)
        self.register_buffer("pos_table", _sinusoidal_table(config.max_sequence_length, d).float(),
                             persistent=False)

    @property
    def n_params(self) -> int:
        return sum(p.numel() for p in self.parameters())

    @property
    def dtype(self):
        return self.head.weight.dtype

    def beta_embed(self, beta) -> torch.Tensor:
        return self.beta_map(beta_features(beta, self.config.beta_frequencies).to(self.dtype))

    def _inputs(self, tokens: torch.Tensor, e_beta: torch.Tensor, t0: int, n: int) -> torch.Tensor:
        """Input embeddings for positions ``t0..t0+n-1``; ``tokens`` holds positions ``< t0+n``."""
        B = e_beta.shape[0]
        x = self.pos_table[t0:t0 + n].to(self.dtype).expand(B, n, -1) + e_beta[:, None, :]
        lo = max(t0 - 1, 0)
        prev = tokens[:, lo:t0 + n - 1]
        emb = self.tok_emb(prev)
        if t0 == 0:
            emb = torch.cat([torch.zeros(B, 1, x.shape[2], dtype=x.dtype), emb], dim=1)
        return x + emb

    def _trunk(self, x, caches=None):
        for i, blk in enumerate(self.blocks):
            x = blk(x, None if caches is None else caches[i])
        return self.head(self.ln_f(x)).squeeze(-1)

    def forward(self, tokens: torch.Tensor, beta) -> torch.Tensor:
        tokens = torch.as_tensor(tokens, dtype=torch.long)
        if tokens.ndim == 1:
            tokens = tokens[None, :]
        B, T = tokens.shape
        if T > self.config.max_sequence_length:
            raise SizeError(f"sequence length {T} exceeds max_sequence_length "
                            f"{self.config.max_sequence_length}")
        e_beta = self.beta_embed(_broadcast_beta(beta, B))
        return self._trunk(self._inputs(tokens, e_beta, 0, T))


def _broadcast_beta(beta, B: int) -> np.ndarray:
    b = np.asarray(beta, dtype=np.float64).reshape(-1)
    if b.size == 1:
        b = np.full(B, b[0])
    if b.size != B:
        raise DimensionError(f"got {b.size} betas for a batch of {B}")
    return b


def build_model(config: GeneratorConfig = GeneratorConfig(), layout: TokenLayout | None = None,
                seed: int = 0) -> IsingFormerNet:
    if layout is not None and layout.n_spins > config.max_sequence_length:
        raise SizeError(f"layout has {layout.n_spins} positions, max_sequence_length is "
                        f"{config.max_sequence_length}")
    return IsingFormerNet(config, layout, seed)


def randomize_(model: IsingFormerNet, seed: int = 0, scale: float = 0.3) -> IsingFormerNet:
    """Overwrite every parameter with N(0, scale^2) noise (tests and gradient checks)."""
    g = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in model.parameters():
            p.copy_(torch.randn(p.shape, generator=g, dtype=torch.float64) * scale)
    return model


# -- inference -----------------------------------------------------------------------

def beta_embed(model: IsingFormerNet, beta: float) -> np.ndarray:
    with torch.no_grad():
        return model.beta_embed([float(beta)])[0].double().numpy()


def forward_logits(model: IsingFormerNet, tokens, beta) -> np.ndarray:
    """Per-position logits (batch x length, or length for a single sequence)."""
    tokens = np.asarray(tokens)
    with torch.no_grad():
        out = model(torch.as_tensor(tokens, dtype=torch.long), beta).double().numpy()
    return out[0] if tokens.ndim == 1 else out


def _token_log_probs(logits: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
    # log Bernoulli(token; sigmoid(logit)) = -softplus(-logit) if 1 else -softplus(logit)
    return -F.softplus(torch.where(tokens > 0, -logits, logits))


def sequence_log_prob(model: IsingFormerNet, tokens, beta, start: int) -> np.ndarray:
    """Sum of token log-probabilities over positions ``>= start``."""
    tokens = torch.as_tensor(np.atleast_2d(tokens), dtype=torch.long)
    with torch.no_grad():
        logits = model(tokens, beta)
        lp = _token_log_probs(logits[:, start:].double(), tokens[:, start:])
    return lp.sum(dim=1).numpy()


def _require_layout(model: IsingFormerNet) -> TokenLayout:
    if model.layout is None:
        raise LayoutError("model has no token layout attached")
    return model.layout


def log_prob(model: IsingFormerNet, S, beta, n_context: int = 0) -> np.ndarray | float:
    """Exact log q(s | prefix, beta) summed over free positions after ``n_context``.

    ``n_context`` free spins (in layout order) are treated as given, matching a
    context-conditioned :func:`sample` call.
    """
    layout = _require_layout(model)
    S = np.asarray(S)
    single = S.ndim == 1
    tokens = layout.to_tokens(np.atleast_2d(S))
    out = sequence_log_prob(model, tokens, _broadcast_beta(beta, tokens.shape[0]),
                            layout.n_prefix + int(n_context))
    return float(out[0]) if single else out


def sample(model: IsingFormerNet, beta, n_samples: int = 1, prefix=None, rng=None,
           context=None, n_context: int = 0):
    """Ancestral sampling. Returns ``(spins, log_q)`` with spins shaped (n_samples, n_spins).

    ``prefix`` holds the clamp values in prefix order (one row, or one per sample).
    ``context`` is an array of full configurations whose first ``n_context`` free
    spins are copied instead of sampled. Uniforms come from ``rng`` (numpy), one
    per sampled position, drawn up front.
    """
    layout = _require_layout(model)
    rng = check_random_state(rng)
    betas = np.asarray(beta, dtype=np.float64).reshape(-1)
    B = betas.size if betas.size > 1 else check_count(n_samples, "n_samples", minimum=1)
    betas = _broadcast_beta(betas, B)
    P, T = layout.n_prefix, layout.n_spins
    n_context = check_count(int(n_context), "n_context")
    if n_context > layout.n_free:
        raise DomainError(f"n_context={n_context} exceeds {layout.n_free} free spins")
    fixed = P + n_context
    tokens = np.zeros((B, T), dtype=np.int64)
    if P:
        if prefix is None:
            raise LayoutError(f"layout has {P} prefix positions but no prefix was given")
        pre = np.atleast_2d(np.asarray(prefix))
        if pre.shape[-1] != P:
            raise LayoutError(f"prefix has {pre.shape[-1]} entries, layout expects {P}")
        tokens[:, :P] = (pre > 0)
    if n_context:
        ctx = layout.to_tokens(np.atleast_2d(context))
        tokens[:, P:fixed] = ctx[:, P:fixed]
    u = rng.random((B, T - fixed))
    if T > fixed:
        _fill_tokens(model, tokens, betas, fixed, u)
    lq = sequence_log_prob(model, tokens, betas, fixed)
    return layout.to_spins(tokens), lq


def _fill_tokens(model: IsingFormerNet, tokens: np.ndarray, betas: np.ndarray, fixed: int,
                 u: np.ndarray) -> None:
    B, T = tokens.shape
    tt = torch.as_tensor(tokens)
    caches = [dict() for _ in model.blocks]
    with torch.no_grad():
        e_beta = model.beta_embed(betas)
        # first chunk runs the fixed tokens in one pass; its last logit is position `fixed`
        t0, n = 0, fixed + 1
        while t0 < T:
            x = model._inputs(tt, e_beta, t0, n)
            logits = model._trunk(x, caches)[:, -1].double().numpy()
            t = t0 + n - 1
            bit = u[:, t - fixed] < 1.0 / (1.0 + np.exp(-logits))
            tt[:, t] = torch.as_tensor(bit.astype(np.int64))
            t0, n = t0 + n, 1
    tokens[:] = tt.numpy()


# -- training -----------------------------------------------------------------------

def _masked_bce(model: IsingFormerNet, tokens: torch.Tensor, betas, start: int) -> torch.Tensor:
    logits = model(tokens, betas)[:, start:]
    target = tokens[:, start:].to(logits.dtype)
    return F.binary_cross_entropy_with_logits(logits, target)


@dataclass
class TrainingCurve:
    epochs: list[int] = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    best_epoch: int = -1

    def rows(self):
        return list(zip(self.epochs, self.train_loss, self.val_loss))


def dataset_tokens(ds: SampleDataset, layout: TokenLayout) -> np.ndarray:
    if ds.n_spins != layout.n_spins:
        raise LayoutError(f"dataset has {ds.n_spins} spins, layout expects {layout.n_spins}")
    return layout.to_tokens(ds.spins)


def train(ds: SampleDataset, layout: TokenLayout, config: GeneratorConfig = GeneratorConfig(),
          hyper: TrainHyper = TrainHyper(), model: IsingFormerNet | None = None,
          log=None) -> tuple[IsingFormerNet, TrainingCurve]:
    """Adam on masked next-token BCE; returns the lowest-validation-loss checkpoint.

    ``model`` resumes from existing weights; otherwise a fresh model is seeded from
    ``hyper.seed``. ``log`` is an optional callable receiving (epoch, train, val).
    """
    if len(ds) == 0:
        raise DomainError("cannot train on an empty dataset")
    if layout.n_free == 0:
        raise DomainError("layout has no free positions to learn")
    tokens = torch.as_tensor(dataset_tokens(ds, layout))
    betas = ds.betas.astype(np.float64)
    rng = np.random.default_rng(hyper.seed)
    perm = rng.permutation(len(ds))
    n_val = max(1, int(round(hyper.val_fraction * len(ds)))) if len(ds) > 1 else 0
    val_idx, tr_idx = perm[:n_val], perm[n_val:]
    if tr_idx.size == 0:
        tr_idx = val_idx
    if model is None:
        model = build_model(config, layout, seed=hyper.seed)
    else:
        model.layout = layout
    model.float()
    torch.manual_seed(hyper.seed)
    opt = torch.optim.Adam(model.parameters(), lr=hyper.lr)
    start = layout.n_prefix
    curve = TrainingCurve()
    best, best_state, stale = math.inf, copy.deepcopy(model.state_dict()), 0
    for epoch in range(1, hyper.max_epochs + 1):
        model.train()
        order = tr_idx[rng.permutation(tr_idx.size)]
        total = 0.0
        for lo in range(0, order.size, hyper.batch_size):
            idx = order[lo:lo + hyper.batch_size]
            loss = _masked_bce(model, tokens[idx], betas[idx], start)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach()) * idx.size
        tr_loss = total / order.size
        val_loss = evaluate_loss(model, tokens[val_idx], betas[val_idx], start) if n_val else tr_loss
        if not math.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        curve.epochs.append(epoch)
        curve.train_loss.append(tr_loss)
        curve.val_loss.append(val_loss)
        if log is not None:
            log(epoch, tr_loss, val_loss)
        if val_loss < best:
            best, best_state, stale = val_loss, copy.deepcopy(model.state_dict()), 0
            curve.best_epoch = epoch
        else:
            stale += 1
            if hyper.patience is not None and stale >= hyper.patience:
                break
    model.load_state_dict(best_state)
    model.eval()
    return model, curve


def evaluate_loss(model: IsingFormerNet, tokens, betas, start: int, batch: int = 512) -> float:
    tokens = torch.as_tensor(tokens, dtype=torch.long)
    betas = np.asarray(betas, dtype=np.float64)
    total = 0.0
    with torch.no_grad():
        for lo in range(0, tokens.shape[0], batch):
            tb = tokens[lo:lo + batch]
            total += float(_masked_bce(model, tb, betas[lo:lo + batch], start)) * tb.shape[0]
    return total / tokens.shape[0]


# -- gradient verification ---------------------------------------------------------------

@dataclass(frozen=True)
class GradientReport:
    max_rel_error: float
    analytic: np.ndarray
    numeric: np.ndarray
    names: tuple[str, ...]


def gradient_check(model: IsingFormerNet, tokens, betas, n_params: int = 200, step: float = 1e-4,
                   seed: int = 0, start: int | None = None, select=None,
                   floor: float = 1e-7) -> GradientReport:
    """Autograd vs central differences in float64 on randomly chosen scalar parameters.

    Relative error is ``|a - n| / max(|a| + |n|, floor)``. ``select`` may list
    ``(parameter_name, flat_index)`` pairs instead of a random draw.
    """
    m = copy.deepcopy(model).double()
    tokens = torch.as_tensor(np.atleast_2d(tokens), dtype=torch.long)
    betas = _broadcast_beta(betas, tokens.shape[0])
    if start is None:
        start = m.layout.n_prefix if m.layout is not None else 0
    named = dict(m.named_parameters())
    m.zero_grad()
    _masked_bce(m, tokens, betas, start).backward()
    if select is None:
        sizes = np.array([p.numel() for p in named.values()])
        names = list(named)
        rng = np.random.default_rng(seed)
        flat = rng.choice(sizes.sum(), size=min(n_params, int(sizes.sum())), replace=False)
        bounds = np.cumsum(sizes)
        select = []
        for f in np.sort(flat):
            k = int(np.searchsorted(bounds, f, side="right"))
            select.append((names[k], int(f - (bounds[k] - sizes[k]))))
    ana, num = [], []
    with torch.no_grad():
        for name, j in select:
            p = named[name].view(-1)
            ana.append(float(named[name].grad.view(-1)[j]))
            orig = float(p[j])
            p[j] = orig + step
            up = float(_masked_bce(m, tokens, betas, start))
            p[j] = orig - step
            down = float(_masked_bce(m, tokens, betas, start))
            p[j] = orig
            num.append((up - down) / (2 * step))
    ana, num = np.array(ana), np.array(num)
    rel = np.abs(ana - num) / np.maximum(np.abs(ana) + np.abs(num), floor)
    return GradientReport(float(rel.max()) if rel.size else 0.0, ana, num,
                          tuple(f"{n}[{j}]" for n, j in select))


# -- checkpoints --------------------------------------------------------------------------

def _config_words(model: IsingFormerNet) -> list[int]:
    c = model.config
    return [FORMAT_VERSION, c.d_model, c.heads, c.ffn_dim, c.layers, c.max_sequence_length,
            c.beta_frequencies, model.n_params]


def encode_checkpoint(model: IsingFormerNet) -> bytes:
    """``ISFW1`` | u32 n | n u32 config words | layout block | f32 LE parameters.

    Config words: version, d_model, heads, ffn_dim, layers, max_sequence_length,
    beta_frequencies, parameter count. Layout block: u32 n_spins, u32 n_prefix,
    u32 n_free (all zero when detached), then the prefix and free indices as u32.
    Parameters follow ``named_parameters()`` order, each flattened row-major.
    """
    buf = io.BytesIO()
    words = _config_words(model)
    buf.write(MAGIC)
    buf.write(struct.pack(f"<I{len(words)}I", len(words), *words))
    lay = model.layout
    if lay is None:
        buf.write(struct.pack("<3I", 0, 0, 0))
    else:
        buf.write(struct.pack("<3I", lay.n_spins, lay.n_prefix, lay.n_free))
        buf.write(np.asarray(lay.prefix_idx + lay.free_idx, dtype="<u4").tobytes())
    for _, p in model.named_parameters():
        buf.write(p.detach().to(torch.float32).numpy().astype("<f4").tobytes())
    return buf.getvalue()


def decode_checkpoint(blob: bytes) -> IsingFormerNet:
    if blob[:len(MAGIC)] != MAGIC:
        raise FormatError("not an ISFW1 checkpoint (bad magic)")
    try:
        off = len(MAGIC)
        (n,) = struct.unpack_from("<I", blob, off)
        off += 4
        words = struct.unpack_from(f"<{n}I", blob, off)
        off += 4 * n
        if words[0] != FORMAT_VERSION:
            raise FormatError(f"unsupported checkpoint version {words[0]}")
        config = GeneratorConfig(*words[1:7])
        n_spins, n_prefix, n_free = struct.unpack_from("<3I", blob, off)
        off += 12
        layout = None
        if n_spins:
            idx = np.frombuffer(blob, dtype="<u4", count=n_prefix + n_free, offset=off)
            off += 4 * (n_prefix + n_free)
            layout = TokenLayout(n_spins, tuple(int(i) for i in idx[:n_prefix]),
                                 tuple(int(i) for i in idx[n_prefix:]))
        model = IsingFormerNet(config, layout)
        if model.n_params != words[7]:
            raise FormatError(f"parameter count {words[7]} does not match config ({model.n_params})")
        with torch.no_grad():
            for _, p in model.named_parameters():
                vals = np.frombuffer(blob, dtype="<f4", count=p.numel(), offset=off)
                off += 4 * p.numel()
                p.copy_(torch.from_numpy(vals.astype(np.float32).reshape(p.shape)))
    except (struct.error, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"truncated or malformed checkpoint: {exc}") from exc
    if off != len(blob):
        raise FormatError(f"{len(blob) - off} trailing bytes in checkpoint")
    model.eval()
    return model


def save_checkpoint(model: IsingFormerNet, path) -> None:
    Path(path).write_bytes(encode_checkpoint(model))


def load_checkpoint(path) -> IsingFormerNet:
    return decode_checkpoint(Path(path).read_bytes())


# -- estimator facade --------------------------------------------------------------------

class IsingFormer(BaseEstimator):
    """Scikit-learn style wrapper: ``fit`` on spin records, ``sample`` and ``score_samples``.

    ``fit(X, betas)`` takes an (n_records, n_spins) array of +-1 spins, or a
    :class:`~tapt.mcmc.SampleDataset` with ``betas`` omitted.
    """

    def __init__(self, d_model=64, heads=2, ffn_dim=128, layers=2, max_sequence_length=1024,
                 beta_frequencies=8, lr=1e-3, batch_size=64, max_epochs=50, val_fraction=0.1,
                 patience=None, random_state=0):
        self.d_model = d_model
        self.heads = heads
        self.ffn_dim = ffn_dim
        self.layers = layers
        self.max_sequence_length = max_sequence_length
        self.beta_frequencies = beta_frequencies
        self.lr = lr
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.val_fraction = val_fraction
        self.patience = patience
        self.random_state = random_state

    def _config(self) -> GeneratorConfig:
        return GeneratorConfig(self.d_model, self.heads, self.ffn_dim, self.layers,
                               self.max_sequence_length, self.beta_frequencies)

    def _hyper(self) -> TrainHyper:
        return TrainHyper(self.lr, self.batch_size, self.max_epochs, self.val_fraction,
                          self.random_state, self.patience)

    def fit(self, X, betas=None, layout: TokenLayout | None = None, warm_start: bool = False):
        if isinstance(X, SampleDataset):
            ds = X
        else:
            if betas is None:
                raise DomainError("betas are required when X is an array")
            ds = SampleDataset(np.asarray(betas, dtype=np.float64), np.asarray(X))
        if layout is None:
            layout = TokenLayout(ds.n_spins, (), tuple(range(ds.n_spins)))
        init = self.model_ if warm_start and hasattr(self, "model_") else None
        self.model_, self.curve_ = train(ds, layout, self._config(), self._hyper(), model=init)
        self.layout_ = layout
        self.training_betas_ = np.unique(ds.betas)
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise DomainError("IsingFormer is not fitted yet")

    def sample(self, beta, n_samples=1, prefix=None, rng=None):
        self._check_fitted()
        return sample(self.model_, beta, n_samples, prefix, rng)

    def score_samples(self, X, beta):
        self._check_fitted()
        return np.atleast_1d(log_prob(self.model_, X, beta))

    def save(self, path) -> None:
        self._check_fitted()
        save_checkpoint(self.model_, path)

    @classmethod
    def from_checkpoint(cls, path) -> "IsingFormer":
        model = load_checkpoint(path)
        est = cls(**{k: v for k, v in asdict(model.config).items()})
        est.model_, est.layout_ = model, model.layout
        return est
