import math
from fractions import Fraction

import numpy as np
import pytest

from cutlab.bnc import CutScore, ScoredCutSet, label_instance
from cutlab.gnn import (
    CutStack,
    GnnModel,
    Target,
    TrainConfig,
    TrainingDivergedError,
    backward,
    encode,
    forward,
    forward_stack,
    grad_check,
    loss,
    make_targets,
    select_cut,
    train,
    train_detailed,
)
from cutlab.instance import Cut, IlpInstance


def _random_model(seed, hidden=8, rounds=2, bias=0.5):
    rng = np.random.default_rng(seed)
    model = GnnModel.initialize(rounds, hidden, seed=seed)
    for name, p in model.params.items():
        if name.endswith(".b"):
            model.params[name] = rng.normal(0, bias, size=p.shape)
    return model


def _random_instance(rng, n, m):
    A = rng.integers(-3, 4, size=(m, n)).tolist()
    return IlpInstance(A, rng.integers(0, 9, size=m).tolist(), rng.integers(-5, 6, size=n).tolist())


def test_encode_worked_example(example):
    g = encode(example, Cut((4, 7), 35))
    np.testing.assert_array_equal(g.var_features, [[5, 4, 35], [8, 7, 35]])
    np.testing.assert_array_equal(g.con_features, np.ones((2, 3)))
    assert set(g.edges) == {(0, 0, 1.0), (0, 1, 1.0), (1, 0, 5.0), (1, 1, 9.0)}
    with pytest.raises(ValueError):
        encode(example, Cut((1,), 1))


def test_stack_matches_single_graphs(example):
    cuts = [Cut((4, 7), 35), Cut((2, 3), 15)]
    model = _random_model(1)
    batched = forward_stack(model, CutStack.from_instance(example, cuts))
    singles = [forward(model, encode(example, c)) for c in cuts]
    np.testing.assert_allclose(batched, singles, rtol=1e-13)


def test_zero_model_outputs_zero(example):
    assert forward(GnnModel(2, 16), encode(example, Cut((4, 7), 35))) == 0.0


def test_no_edges_uses_isolated_embeddings():
    inst = IlpInstance([[0, 0], [0, 0]], [1, 1], [3, -2])
    model = _random_model(4)
    g = encode(inst, Cut((1, 2), 5))
    assert g.edges == ()
    P = model.params
    relu = lambda v: np.maximum(v, 0)  # noqa: E731
    hv = relu(g.var_features @ P["embed.W"] + P["embed.b"])
    hv = hv + relu(P["round0.c2v.b"]) + relu(P["round1.c2v.b"])
    expected = hv.mean(axis=0) @ P["readout.W"] + P["readout.b"][0]
    assert forward(model, g) == pytest.approx(expected, abs=1e-12)


def test_hand_traced_single_variable():
    # h = 3, embedding is the identity, message maps are the identity, readout sums.
    inst = IlpInstance([[2]], [7], [1])
    g = encode(inst, Cut((1,), 3))  # features (1, 1, 3), one edge of weight 2
    eye = np.eye(3)
    params = {
        "embed.W": eye, "embed.b": np.zeros(3),
        "round0.v2c.W": eye, "round0.v2c.b": np.zeros(3), "round0.c2v.W": eye, "round0.c2v.b": np.zeros(3),
        "round1.v2c.W": eye, "round1.v2c.b": np.zeros(3), "round1.c2v.W": eye, "round1.c2v.b": np.zeros(3),
        "readout.W": np.ones(3), "readout.b": np.zeros(1),
    }
    model = GnnModel(2, 3, params)
    # constraint embedding (1,1,1); variable (1,1,3)
    # round 0: hc = (1,1,1) + 2*(1,1,3) = (3,3,7); hv = (1,1,3) + 2*(3,3,7) = (7,7,17)
    # round 1: hc = (3,3,7) + 2*(7,7,17) = (17,17,41); hv = (7,7,17) + 2*(17,17,41) = (41,41,99)
    assert forward(model, g) == pytest.approx(41 + 41 + 99)


def test_constraint_permutation_invariance():
    rng = np.random.default_rng(0)
    for case in range(100):
        n, m = (int(v) for v in rng.integers(1, 7, size=2))
        inst = _random_instance(rng, n, m)
        cut = Cut(rng.integers(-4, 5, size=n).tolist(), int(rng.integers(0, 10)))
        perm = rng.permutation(m)
        shuffled = IlpInstance([inst.A[i] for i in perm], [inst.b[i] for i in perm], inst.c)
        model = _random_model(case)
        a, b = forward(model, encode(inst, cut)), forward(model, encode(shuffled, cut))
        assert abs(a - b) <= 1e-9


def test_select_cut_follows_variable_relabelling():
    rng = np.random.default_rng(2)
    inst = _random_instance(rng, 3, 4)
    cuts = [Cut(rng.integers(-4, 5, size=3).tolist(), int(rng.integers(0, 10))) for _ in range(5)]
    perm = [2, 0, 1]
    relabel = IlpInstance([[row[j] for j in perm] for row in inst.A], inst.b, [inst.c[j] for j in perm])
    moved = [Cut([c.coeffs[j] for j in perm], c.rhs) for c in cuts]
    order = [3, 1, 4, 0, 2]
    model = _random_model(9)
    first = select_cut(model, inst, cuts, seed=0)
    second = select_cut(model, relabel, [moved[i] for i in order], seed=0)
    assert order[second] == first


def test_loss_examples():
    assert loss([0, 0], [0.5, 0.5]) == pytest.approx(0.5 * math.log(2), abs=1e-12)
    assert loss([10, -10], [1, 0]) == pytest.approx(0.5 * math.log1p(math.exp(-20)), abs=1e-15)
    assert loss([1, 0, 0], [1, 0, 0]) == pytest.approx(-math.log(math.e / (math.e + 2)) / 3, abs=1e-12)
    assert loss([1, 0, 0], [1, 0, 0]) == pytest.approx(0.18381, abs=1e-5)


def test_loss_bounds():
    rng = np.random.default_rng(1)
    for _ in range(200):
        k = int(rng.integers(1, 8))
        x, y = rng.normal(0, 5, size=k), rng.dirichlet(np.ones(k))
        assert loss(x, y) >= 0
        # constant scores: uniform softmax
        assert loss(np.full(k, 3.7), y) == pytest.approx(math.log(k) / k, abs=1e-12)
    u = np.full(4, 0.25)
    assert loss(np.zeros(4), u) == pytest.approx(-(u * np.log(u)).sum() / 4)


def test_loss_rejects_bad_targets():
    for y in ([0.5, 0.6], [-0.1, 1.1], [np.nan, 1.0]):
        with pytest.raises(ValueError):
            loss([0, 0], y)
    with pytest.raises(ValueError):
        loss([0, 0, 0], [0.5, 0.5])


def _scored(gaps, reductions, inst=None):
    entries = tuple(
        CutScore(i, Cut((1, 1), i + 1), Fraction(g), 1, Fraction(r)) for i, (g, r) in enumerate(zip(gaps, reductions))
    )
    return ScoredCutSet("s", 9, Fraction(1), Fraction(0), entries, inst)


def test_targets(example):
    s = label_instance(example)
    y = make_targets(s, TrainConfig(target=Target.GAP_CLOSED))
    np.testing.assert_allclose(y, [0.31002551887238755, 0.6899744811276125], atol=1e-12)
    np.testing.assert_allclose(y, [0.31003, 0.68997], atol=1e-5)
    cold = make_targets(s, TrainConfig(target="tree", temperature=1e-4))
    np.testing.assert_allclose(cold, [0, 1], atol=1e-12)
    flat = make_targets(_scored([Fraction(1, 3)] * 3, [0, 0, 0]), TrainConfig())
    np.testing.assert_allclose(flat, [1 / 3] * 3)
    with pytest.raises(ValueError):
        TrainConfig(temperature=0)


def test_targets_are_distributions():
    rng = np.random.default_rng(6)
    for _ in range(100):
        k = int(rng.integers(1, 12))
        s = _scored(rng.integers(0, 100, size=k) / 100, rng.integers(-300, 100, size=k) / 100)
        for target in Target:
            y = make_targets(s, TrainConfig(target=target, temperature=float(rng.uniform(0.01, 5))))
            assert np.all(y >= 0) and y.sum() == pytest.approx(1.0)


def test_stationary_point_has_zero_gradient(example):
    stack = CutStack.from_instance(example, [Cut((4, 7), 35), Cut((4, 7), 35)])
    _, grads = backward(GnnModel(2, 8), [(stack, np.array([0.5, 0.5]))])
    assert grads["readout.b"][0] == 0
    for g in grads.values():
        assert not np.any(g)


def test_gradient_scales_with_targets(example):
    model = _random_model(3)
    stack = CutStack.from_instance(example, [Cut((4, 7), 35), Cut((2, 3), 15)])
    y = np.array([0.3, 0.7])
    l1, g1 = backward(model, [(stack, y)])
    l2, g2 = backward(model, [(stack, 2 * y)])
    assert l2 == pytest.approx(2 * l1)
    for name in g1:
        np.testing.assert_allclose(g2[name], 2 * g1[name], rtol=1e-12, atol=1e-15)


def test_grad_check_small():
    rng = np.random.default_rng(10)
    for i in range(5):
        n, m, k = (int(v) for v in rng.integers(1, 4, size=3))
        stack = CutStack(rng.integers(-2, 3, size=(m, n)).astype(float), rng.uniform(-1, 1, size=(k, n, 3)))
        assert grad_check(_random_model(i, hidden=4), stack, rng.dirichlet(np.ones(k))) < 1e-4


def test_grad_check_detects_wrong_gradient(monkeypatch, example):
    import cutlab.gnn as gnn

    real = gnn.backward_stack

    def broken(model, stack, dout, tape):
        grads = real(model, stack, dout, tape)
        grads["embed.W"] = grads["embed.W"] * 1.01
        return grads

    monkeypatch.setattr(gnn, "backward_stack", broken)
    stack = CutStack.from_instance(example, [Cut((4, 7), 35), Cut((2, 3), 15)])
    assert grad_check(_random_model(0, hidden=4), stack, [0.3, 0.7]) > 1e-3


def _toy_dataset(count, seed=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        inst = _random_instance(rng, 3, 3)
        k = int(rng.integers(2, 5))
        entries = tuple(
            CutScore(r, Cut(rng.integers(-3, 4, size=3).tolist(), int(rng.integers(0, 9))),
                     Fraction(int(rng.integers(0, 11)), 10), int(rng.integers(1, 9)), Fraction(int(rng.integers(-5, 9)), 9))
            for r in range(k)
        )
        out.append(ScoredCutSet(f"toy-{i}", 9, Fraction(1), Fraction(0), entries, IlpInstance(inst.A, inst.b, inst.c, f"toy-{i}")))
    return out


def test_training_memorises_one_instance(example):
    s = label_instance(example)
    cfg = TrainConfig(epochs=300, learning_rate=1e-2, temperature=0.05, hidden=16, seed=1)
    model = train([s], cfg)
    cuts = [e.cut for e in s.entries]
    assert select_cut(model, example, cuts, seed=0) == 1
    y = make_targets(s, cfg)
    assert loss(forward_stack(model, CutStack.from_instance(example, cuts)), y) < 0.05


def test_training_is_order_independent():
    data = _toy_dataset(25)
    cfg = TrainConfig(epochs=3, hidden=8, seed=5)
    a = train(data, cfg)
    b = train(list(reversed(data)), cfg)
    assert a.digest() == b.digest()
    assert train(data, TrainConfig(epochs=3, hidden=8, seed=6)).digest() != a.digest()


def test_training_reports_and_validation_split():
    res = train_detailed(_toy_dataset(30), TrainConfig(epochs=4, hidden=8))
    assert (res.n_train, res.n_val) == (27, 3)
    assert len(res.train_losses) == len(res.val_losses) == 4
    assert res.val_losses[res.best_epoch] == min(res.val_losses)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_divergence():
    with pytest.raises(TrainingDivergedError) as err:
        train(_toy_dataset(12), TrainConfig(epochs=5, hidden=8, learning_rate=1e200))
    assert err.value.epoch >= 0


def test_training_needs_cuts():
    with pytest.raises(ValueError):
        train([ScoredCutSet("x", 1, Fraction(1), Fraction(0))], TrainConfig())


def test_select_cut_rules(example):
    cuts = [Cut((4, 7), 35), Cut((2, 3), 15), Cut((1, 1), 6)]
    with pytest.raises(ValueError):
        select_cut(GnnModel(2, 4), example, [], seed=0)
    assert select_cut(_random_model(1), example, cuts[:1], seed=3) == 0
    picks = {select_cut(GnnModel(2, 4), example, cuts, seed=s) for s in range(40)}
    assert picks == {0, 1, 2}


def test_select_cut_hand_traced_readout():
    # identity embedding, silent message maps, readout on the cut-coefficient channel
    inst = IlpInstance([[1]], [9], [1])
    params = {name: np.zeros(shape) for name, shape in GnnModel(2, 3).params.items() for shape in [shape.shape]}
    params["embed.W"] = np.eye(3)
    params["readout.W"] = np.array([0.0, 1.0, 0.0])
    model = GnnModel(2, 3, params)
    cuts = [Cut((2,), 9), Cut((5,), 9), Cut((3,), 9)]
    scores = forward_stack(model, CutStack.from_instance(inst, cuts))
    np.testing.assert_allclose(scores, [2, 5, 3])
    assert select_cut(model, inst, cuts, seed=0) == 1


def test_checkpoint_roundtrip(tmp_path):
    model = _random_model(2)
    path = tmp_path / "m.json"
    model.save(path, {"seed": 2})
    back = GnnModel.load(path)
    assert back.digest() == model.digest()
    with pytest.raises(ValueError):
        GnnModel(2, 4, {"embed.W": np.zeros((3, 4))})


def test_train_config_json():
    cfg = TrainConfig(target="tree", seed=3)
    assert TrainConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(ValueError):
        TrainConfig.from_json({"lr": 1})
