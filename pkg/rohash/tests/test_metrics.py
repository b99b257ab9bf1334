# Licensed under a 3-clause BSD style license - see LICENSE.rst
import json

import numpy as np
import pytest

from ..forge import CorpusManifest, gen_synthetic, build_experiment, write_corpus, write_images
from ..manipulation import ManipulationSpec
from ..matcher import (Judgment, ReferenceDb, enroll, batch_min_distance_arrays,
                       EmptyDatabase)
from ..metrics import (NoFakeQueries, DegenerateLabels, EmptyInput, accuracy_fake,
                       average_precision, far_frr_sweep, eer_threshold,
                       query_distances, evaluate)
from ..forge import read_manifest
from ..robust_hash import hash_bytes


def judgments_for(verdicts):
    # distance 10 at d=5 is fake, distance 0 is real
    return [Judgment('q{}'.format(i), 10 if v == 'fake' else 0, 'r', 5)
            for i, v in enumerate(verdicts)]


def test_accuracy_fake():
    labels = ['fake'] * 48 + ['real'] * 10
    verdicts = ['fake'] * 42 + ['real'] * 6 + ['fake'] * 10
    assert accuracy_fake(judgments_for(verdicts), labels) == 0.875
    assert accuracy_fake(judgments_for(['fake'] * 5), ['fake'] * 5) == 1.0
    assert accuracy_fake(judgments_for(['real'] * 5), ['fake'] * 5) == 0.0
    with pytest.raises(NoFakeQueries):
        accuracy_fake(judgments_for(['real'] * 3), ['real'] * 3)
    with pytest.raises(ValueError):
        accuracy_fake(judgments_for(['real'] * 3), ['real', 'fake', 'other'])


def test_accuracy_fake_hand_counts():
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(1, 40))
        labels = ['fake' if x else 'real' for x in rng.random(n) < 0.6]
        labels[0] = 'fake'
        verdicts = ['fake' if x else 'real' for x in rng.random(n) < 0.5]
        n_qf = labels.count('fake')
        n_tn = sum(1 for lab, v in zip(labels, verdicts) if lab == 'fake' and v == 'fake')
        assert accuracy_fake(judgments_for(verdicts), labels) == n_tn / n_qf


def ap_oracle(scores, labels):
    """Average precision from the definition: sort by descending score,
    treat equal scores as one group and take precision after each group."""
    items = sorted(zip(scores, labels), key=lambda x: -x[0])
    n_pos = sum(1 for _, lab in items if lab == 'fake')
    total = 0.0
    seen = 0
    seen_pos = 0
    i = 0
    while i < len(items):
        j = i
        while j < len(items) and items[j][0] == items[i][0]:
            j += 1
        group_pos = sum(1 for _, lab in items[i:j] if lab == 'fake')
        seen += j - i
        seen_pos += group_pos
        total += group_pos * seen_pos / seen
        i = j
    return total / n_pos


def test_average_precision_examples():
    assert average_precision([9, 1], ['fake', 'real']) == 1.0
    assert average_precision([1, 9], ['fake', 'real']) == 0.5
    assert average_precision([3, 3, 3, 3], ['fake', 'real', 'real', 'fake']) == 0.5
    with pytest.raises(DegenerateLabels):
        average_precision([1, 2], ['fake', 'fake'])
    with pytest.raises(DegenerateLabels):
        average_precision([1, 2], ['real', 'real'])


def test_average_precision_oracle():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(2, 13))
        scores = rng.integers(0, 5, size=n)
        labels = ['fake' if x else 'real' for x in rng.random(n) < 0.5]
        labels[0], labels[1] = 'fake', 'real'
        assert abs(average_precision(scores, labels) - ap_oracle(scores, labels)) <= 1e-12
        # Rank statistic: invariant under strictly increasing transforms
        assert abs(average_precision(np.exp(scores), labels)
                   - average_precision(scores, labels)) <= 1e-12


def test_far_frr_boundaries():
    curve = far_frr_sweep([0, 1, 5], [3, 60, 120])
    assert len(curve) == 122
    assert list(curve['d'][[0, -1]]) == [0, 121]
    assert curve['far'][0] == 0 and curve['frr'][0] == 1
    assert curve['far'][121] == 1 and curve['frr'][121] == 0
    assert np.all(np.diff(curve['far']) >= 0)
    assert np.all(np.diff(curve['frr']) <= 0)
    assert curve.meta['n_real'] == 3 and curve.meta['n_fake'] == 3
    with pytest.raises(EmptyInput):
        far_frr_sweep([], [1])
    with pytest.raises(EmptyInput):
        far_frr_sweep([1], [])
    with pytest.raises(ValueError):
        far_frr_sweep([121], [1])


def test_far_frr_counting_oracle():
    rng = np.random.default_rng(3)
    real = rng.integers(0, 30, size=57)
    fake = rng.integers(10, 121, size=43)
    curve = far_frr_sweep(real, fake)
    for d in rng.integers(0, 122, size=10):
        assert curve['frr'][d] == sum(1 for x in real if x >= d) / len(real)
        assert curve['far'][d] == sum(1 for x in fake if x < d) / len(fake)


def test_eer_threshold():
    assert eer_threshold(far_frr_sweep([0, 1, 2, 2], [5, 7, 9])) == 3
    assert eer_threshold(far_frr_sweep([0], [120])) == 1
    same = [4, 8, 8, 15]
    curve = far_frr_sweep(same, same)
    gap = np.abs(curve['far'] - curve['frr'])
    assert eer_threshold(curve) == int(np.flatnonzero(gap == gap.min())[0])


def test_eer_threshold_brute_force():
    rng = np.random.default_rng(4)
    for _ in range(20):
        real = rng.integers(0, 20, size=int(rng.integers(1, 30)))
        fake = rng.integers(5, 60, size=int(rng.integers(1, 30)))
        best = None
        for d in range(122):
            frr = sum(1 for x in real if x >= d) * len(fake)
            far = sum(1 for x in fake if x < d) * len(real)
            if best is None or abs(far - frr) < best[0]:
                best = (abs(far - frr), d)
        assert eer_threshold(far_frr_sweep(real, fake)) == best[1]


@pytest.fixture(scope='module')
def experiment(tmp_path_factory):
    """Enrolled synthetic references plus a written copy-move / splice query set"""
    out = tmp_path_factory.mktemp('experiment')
    images, corpus_manifest = gen_synthetic(12, seed=11)
    write_images(images, corpus_manifest, out / 'corpus')
    db = ReferenceDb()
    for image_id, img in zip(corpus_manifest.query_ids, images):
        enroll(db, image_id, img)
    specs = [ManipulationSpec('copy_move', region_fraction=0.25),
             ManipulationSpec('splice', region_fraction=0.25)]
    exp = build_experiment(list(zip(corpus_manifest.query_ids, images)), specs, seed=5)
    manifest_file = write_corpus(exp.payloads, exp.manifest, out / 'queries')
    return db, read_manifest(manifest_file), read_manifest(out / 'corpus' / 'manifest.csv')


def test_query_distances_of_enrolled_originals(experiment):
    db, manifest, corpus_manifest = experiment
    dists, nearest = query_distances(corpus_manifest, db, threads=2)
    assert np.all(dists == 0)
    assert nearest == corpus_manifest.query_ids
    with pytest.raises(EmptyDatabase):
        query_distances(corpus_manifest, ReferenceDb())


def test_evaluate_report(experiment):
    db, manifest, _ = experiment
    report = evaluate(manifest, db, config={'command': 'evaluate'})
    assert report.calibration == 'pooled'
    assert report.threshold_used == report.eer_threshold
    assert report.counts['N_Qf'] == 24 and report.counts['N_real'] == 12
    assert report.acc_fake == report.counts['N_tn'] / report.counts['N_Qf']
    assert 0 <= report.ap <= 1
    assert list(report.rows) == ['copy_move', 'splice']
    for row in report.rows.values():
        assert row.threshold_used == report.threshold_used
        assert row.counts['N_Qf'] == 12 and row.counts['N_real'] == 12

    data = json.loads(report.to_json())
    for key in ('ap', 'acc_fake', 'acc_real', 'eer_threshold', 'threshold_used',
                'calibration', 'counts', 'curve', 'config', 'rows'):
        assert key in data
    assert len(data['curve']) == 122
    assert data['config'] == {'command': 'evaluate'}


def test_evaluate_calibration_modes(experiment, tmp_path):
    db, manifest, _ = experiment
    report = evaluate(manifest, db, calibration='per-row')
    for row in report.rows.values():
        assert row.threshold_used == row.eer_threshold
        assert row.calibration == 'per-row'

    report = evaluate(manifest, db, d=3)
    assert report.calibration == 'fixed'
    assert report.threshold_used == 3
    assert all(row.threshold_used == 3 for row in report.rows.values())

    report = evaluate(manifest, db, d=121)
    assert report.acc_fake == 0
    assert report.acc_real == 1

    report.write_curve(tmp_path / 'curve.csv')
    lines = (tmp_path / 'curve.csv').read_text().splitlines()
    assert lines[0] == 'd,far,frr,n_false_accept,n_false_reject'
    assert len(lines) == 123

    with pytest.raises(ValueError):
        evaluate(manifest, db, calibration='median')


def test_evaluate_errors(experiment, tmp_path):
    db, manifest, corpus_manifest = experiment
    with pytest.raises(NoFakeQueries):
        evaluate(corpus_manifest, db)
    missing = CorpusManifest([('a', 'a.jpg', 'real', 'x'), ('b', 'b.jpg', 'fake', 'x')],
                             base_dir=tmp_path)
    with pytest.raises(FileNotFoundError, match='a.jpg'):
        evaluate(missing, db)


@pytest.mark.parametrize('corpus_seed, experiment_seed', [(2024, 99), (7, 1), (31, 5)])
def test_copy_move_and_splice_detected(corpus_seed, experiment_seed):
    """100 references; copy-move and splice fakes after the Q=80 pass must be
    caught with an EER-calibrated threshold."""
    images, corpus_manifest = gen_synthetic(100, seed=corpus_seed)
    corpus = list(zip(corpus_manifest.query_ids, images))
    db = ReferenceDb()
    for image_id, img in corpus:
        enroll(db, image_id, img)
    specs = [ManipulationSpec('copy_move', region_fraction=0.25),
             ManipulationSpec('splice', region_fraction=0.25)]
    exp = build_experiment(corpus, specs, seed=experiment_seed)

    hashes = [hash_bytes(exp.payloads[row.file_path]) for row in exp.manifest]
    dists, _ = batch_min_distance_arrays(hashes, db)
    is_fake = np.array([row.label == 'fake' for row in exp.manifest])
    names = np.array([row.manipulation for row in exp.manifest])
    for name in ('copy_move', 'splice'):
        mask = ~is_fake | (names == name)
        labels = np.where(is_fake[mask], 'fake', 'real')
        d = eer_threshold(far_frr_sweep(dists[mask][~is_fake[mask]],
                                        dists[mask][is_fake[mask]]))
        judgments = [Judgment(str(i), dist, 'r', d) for i, dist in enumerate(dists[mask])]
        assert accuracy_fake(judgments, labels) >= 0.90
        assert average_precision(dists[mask], labels) >= 0.95
