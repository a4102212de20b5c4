from suarpsim.matrix import BLOCKED, POISON_STACKS, SPOOF_STACKS, SUCCESS, _split, run_attack_matrix


def test_split_is_exact():
    assert _split(10_000, 3) == [3334, 3333, 3333]
    assert sum(_split(7, 7)) == 7


def test_small_matrix_verdicts():
    r = run_attack_matrix(seeds=[1, 2, 3], attempts=60, legacy_attempts=3)
    assert r.seed_invariant
    assert r.cell("poisoning", "legacy").verdict == SUCCESS
    assert r.cell("spoofing", "dhcp").verdict == SUCCESS
    for stack in POISON_STACKS[1:]:
        c = r.cell("poisoning", stack)
        assert (c.verdict, c.attempts) == (BLOCKED, 60)
    for stack in SPOOF_STACKS[1:]:
        c = r.cell("spoofing", stack)
        assert (c.verdict, c.attempts) == (BLOCKED, 60)
    assert r.cell("insider", "suarp:AltV2").verdict == BLOCKED
    assert '"seed_invariant": true' in r.to_json()
    assert "identical matrix across seeds: True" in r.render()


def test_same_seeds_same_result():
    a = run_attack_matrix(seeds=[5], attempts=20, legacy_attempts=2).to_dict()
    b = run_attack_matrix(seeds=[5], attempts=20, legacy_attempts=2).to_dict()
    assert a == b
