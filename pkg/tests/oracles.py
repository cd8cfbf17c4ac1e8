"""Naive reference implementations used as independent test oracles.

Everything here is written for clarity over speed: plain loops, full
enumeration, central finite differences. The production code must agree
with these, not the other way around.
"""

import math

import torch


# ---------------------------------------------------------------------------
# n-gram / LCS metric oracles
# ---------------------------------------------------------------------------

def ngrams(tokens, n):
    out = []
    for i in range(len(tokens) - n + 1):
        out.append(tuple(tokens[i:i + n]))
    return out


def modified_precision(hyp, ref, n):
    """Clipped n-gram precision as (matches, total), no smoothing."""
    hyp_ngrams = ngrams(hyp, n)
    ref_ngrams = ngrams(ref, n)
    matches = 0
    seen = []
    for g in hyp_ngrams:
        # count of g in ref minus how many times we already matched it
        available = ref_ngrams.count(g) - seen.count(g)
        if available > 0:
            matches += 1
            seen.append(g)
    return matches, len(hyp_ngrams)


def naive_bleu(hyp, ref, n):
    if len(hyp) == 0:
        return 0.0
    log_sum = 0.0
    for k in range(1, n + 1):
        matches, total = modified_precision(hyp, ref, k)
        if matches == 0:
            # add-one smoothing on zero-match orders
            p = (matches + 1) / (total + 1)
        else:
            p = matches / total
        log_sum += math.log(p)
    bp = math.exp(min(0.0, 1.0 - len(ref) / len(hyp)))
    return bp * math.exp(log_sum / n)


def naive_corpus_bleu(pairs, n):
    """Corpus-level BLEU: pool counts over all pairs, then combine."""
    total_hyp_len = sum(len(h) for h, _ in pairs)
    total_ref_len = sum(len(r) for _, r in pairs)
    if total_hyp_len == 0:
        return 0.0
    log_sum = 0.0
    for k in range(1, n + 1):
        matches = 0
        total = 0
        for hyp, ref in pairs:
            m, t = modified_precision(hyp, ref, k)
            matches += m
            total += t
        if matches == 0:
            p = (matches + 1) / (total + 1)
        else:
            p = matches / total
        log_sum += math.log(p)
    bp = math.exp(min(0.0, 1.0 - total_ref_len / total_hyp_len))
    return bp * math.exp(log_sum / n)


def lcs_length(a, b):
    # full DP table, no optimizations
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i][j] = table[i - 1][j - 1] + 1
            else:
                table[i][j] = max(table[i - 1][j], table[i][j - 1])
    return table[len(a)][len(b)]


def naive_rouge_l(hyp, ref, beta=1.2):
    if len(hyp) == 0 or len(ref) == 0:
        return 0.0
    lcs = lcs_length(hyp, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(hyp)
    r = lcs / len(ref)
    return (1 + beta ** 2) * p * r / (r + beta ** 2 * p)


def naive_stem(token):
    if token.endswith("ing") and len(token) > 5:
        return token[:-3]
    if token.endswith("ed") and len(token) > 4:
        return token[:-2]
    if token.endswith("es") and len(token) > 4:
        return token[:-2]
    if token.endswith("s") and len(token) > 3 and not token.endswith("ss"):
        return token[:-1]
    return token


def naive_meteor_alignment(hyp, ref):
    """Two-pass earliest-match alignment: exact first, then stems.

    Returns a list of (hyp_index, ref_index) pairs sorted by hyp index.
    """
    ref_used = [False] * len(ref)
    pairs = []
    aligned_hyp = [False] * len(hyp)
    # pass 1: exact
    for i in range(len(hyp)):
        for j in range(len(ref)):
            if not ref_used[j] and hyp[i] == ref[j]:
                pairs.append((i, j))
                ref_used[j] = True
                aligned_hyp[i] = True
                break
    # pass 2: stem equality on leftovers
    for i in range(len(hyp)):
        if aligned_hyp[i]:
            continue
        for j in range(len(ref)):
            if not ref_used[j] and naive_stem(hyp[i]) == naive_stem(ref[j]):
                pairs.append((i, j))
                ref_used[j] = True
                aligned_hyp[i] = True
                break
    pairs.sort()
    return pairs


def naive_meteor_lite(hyp, ref):
    if len(hyp) == 0 or len(ref) == 0:
        return 0.0
    pairs = naive_meteor_alignment(hyp, ref)
    m = len(pairs)
    if m == 0:
        return 0.0
    p = m / len(hyp)
    r = m / len(ref)
    f_mean = 10 * p * r / (r + 9 * p)
    chunks = 1
    for k in range(1, len(pairs)):
        hi, ri = pairs[k]
        hp, rp = pairs[k - 1]
        if not (hi == hp + 1 and ri == rp + 1):
            chunks += 1
    penalty = 0.5 * (chunks / m) ** 3
    return f_mean * (1 - penalty)


def naive_mixed_reward(hyp, ref, weights=(2.0, 2.0, 1.0, 1.0, 2.0, 2.0)):
    parts = [
        naive_bleu(hyp, ref, 1),
        naive_bleu(hyp, ref, 2),
        naive_bleu(hyp, ref, 3),
        naive_bleu(hyp, ref, 4),
        naive_meteor_lite(hyp, ref),
        naive_rouge_l(hyp, ref),
    ]
    return sum(w * s for w, s in zip(weights, parts))


# ---------------------------------------------------------------------------
# finite-difference gradient oracle
# ---------------------------------------------------------------------------

def fd_gradient(f, tensor, h=1e-6):
    """Central finite differences of a scalar function w.r.t. one tensor.

    ``f`` must be a pure function of the tensor's current values. Works
    coordinate by coordinate, so keep the tensor small.
    """
    tensor = tensor.detach()
    grad = torch.zeros_like(tensor)
    flat = tensor.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + h
        f_plus = float(f())
        flat[i] = orig - h
        f_minus = float(f())
        flat[i] = orig
        gflat[i] = (f_plus - f_minus) / (2 * h)
    return grad


def rel_error(a, b):
    a = a.detach().reshape(-1)
    b = b.detach().reshape(-1)
    denom = max(a.norm().item(), b.norm().item(), 1e-12)
    return (a - b).norm().item() / denom


def check_gradients(loss_fn, params, h=1e-6, tol=1e-4):
    """Compare autograd gradients of ``loss_fn()`` against central FD.

    ``params`` is a list of leaf tensors with requires_grad=True that
    ``loss_fn`` reads. Returns the worst relative error over all params.
    """
    loss = loss_fn()
    grads = torch.autograd.grad(loss, params, allow_unused=False)
    worst = 0.0
    for p, g in zip(params, grads):
        with torch.no_grad():
            fd = fd_gradient(lambda: loss_fn().item(), p.data, h=h)
        worst = max(worst, rel_error(g, fd))
    assert worst < tol, f"gradient mismatch: rel error {worst:.3e} >= {tol}"
    return worst


# ---------------------------------------------------------------------------
# exhaustive decoding oracle
# ---------------------------------------------------------------------------

def enumerate_best_sequence(step_logprobs, bos, eos, vocab_size, max_len):
    """Exhaustively search all decodes of length <= max_len.

    ``step_logprobs(prefix)`` returns a list of next-token log probabilities
    given a prefix that starts with ``bos``. Sequences terminate at ``eos``
    or at ``max_len`` generated tokens; ranking is by total log probability
    divided by generated length. Returns (best_sequence, best_score) where
    the sequence excludes ``bos`` but includes ``eos`` when present.
    """
    best = (None, -math.inf)

    def recurse(prefix, logp, generated):
        nonlocal best
        if generated > 0 and (prefix[-1] == eos or generated == max_len):
            score = logp / generated
            if score > best[1]:
                best = (list(prefix[1:]), score)
            return
        lp = step_logprobs(prefix)
        for tok in range(vocab_size):
            recurse(prefix + [tok], logp + lp[tok], generated + 1)

    recurse([bos], 0.0, 0)
    return best
