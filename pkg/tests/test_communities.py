"""Community bookkeeping, membership table, cover container and cover files."""

import io
import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import brute_boundary, brute_degrees, path, random_graph, star, triangle
from mscd.communities import (
    Community,
    Cover,
    MembershipTable,
    apply_node_add,
    apply_node_remove,
    community_degrees,
    membership_update,
    read_cover,
    rebuild_membership,
    write_cover,
)
from mscd.graph import Graph


class TestCommunityDegrees:
    def test_isolated_triangle(self):
        assert community_degrees(triangle(), {0, 1, 2}) == (6.0, 0.0)

    def test_path_pair(self):
        g = path(3)  # labels 0-1-2
        assert community_degrees(g, {0, 1}) == (2.0, 1.0)

    def test_empty_set(self):
        assert community_degrees(triangle(), set()) == (0.0, 0.0)

    def test_unknown_node(self):
        with pytest.raises(ValueError, match="unknown node"):
            community_degrees(triangle(), {0, 7})

    def test_weighted(self):
        g = Graph.from_edges([(0, 1, 2.0), (1, 2, 0.5)])
        assert community_degrees(g, {0, 1}) == (4.0, 0.5)


class TestCommunityIncremental:
    def test_add_completes_triangle(self):
        g = triangle()
        c = Community.from_nodes(g, {0, 1}, cid=0)
        assert (c.k_in, c.k_out) == (2.0, 2.0)
        apply_node_add(c, g, 2)
        assert (c.k_in, c.k_out) == (6.0, 0.0)
        assert set(c.boundary_neighbors) == set()

    def test_add_on_path(self):
        g = path(3)
        c = Community.from_nodes(g, {0}, cid=0)
        apply_node_add(c, g, 1)
        assert (c.k_in, c.k_out) == (2.0, 1.0)

    def test_add_star_center(self):
        g = star(3)  # center 0, leaves 1..3
        c = Community.from_nodes(g, {1}, cid=0)
        apply_node_add(c, g, 0)
        assert (c.k_in, c.k_out) == (2.0, 2.0)

    def test_remove_from_triangle(self):
        g = triangle()
        c = Community.from_nodes(g, {0, 1, 2}, cid=0)
        apply_node_remove(c, g, 2)
        assert (c.k_in, c.k_out) == (2.0, 2.0)
        assert set(c.boundary_neighbors) == {2}

    def test_add_remove_involution(self):
        g = star(3)
        original = Community.from_nodes(g, {1}, cid=7)
        c = Community.from_nodes(g, {1}, cid=7)
        apply_node_add(c, g, 0)
        apply_node_remove(c, g, 0)
        assert c == original

    def test_add_existing_member_rejected(self):
        g = triangle()
        c = Community.from_nodes(g, {0, 1}, cid=0)
        with pytest.raises(ValueError, match="already a member"):
            c.add_node(g, 1)

    def test_add_non_adjacent_rejected(self):
        g = path(4)
        c = Community.from_nodes(g, {0}, cid=0)
        with pytest.raises(ValueError, match="not adjacent"):
            c.add_node(g, 3)

    def test_add_to_empty_allowed(self):
        g = triangle()
        c = Community(cid=0)
        c.add_node(g, 1)
        assert c.nodes == {1}
        assert (c.k_in, c.k_out) == (0.0, 2.0)

    def test_remove_nonmember_rejected(self):
        g = triangle()
        c = Community.from_nodes(g, {0, 1}, cid=0)
        with pytest.raises(ValueError, match="not a member"):
            c.remove_node(g, 2)

    def test_remove_last_member_rejected(self):
        g = triangle()
        c = Community.from_nodes(g, {0}, cid=0)
        with pytest.raises(ValueError, match="dissolve"):
            c.remove_node(g, 0)

    def test_boundary_matches_brute_force(self):
        rng = random.Random(5)
        g = random_graph(rng, 20, 0.2)
        c = Community.from_nodes(g, {0, 3, 7, 11}, cid=0)
        assert set(c.boundary_neighbors) == brute_boundary(g, c.nodes)

    def test_from_nodes_matches_oracle(self):
        rng = random.Random(11)
        for weighted in (False, True):
            g = random_graph(rng, 25, 0.15, weighted=weighted)
            nodes = set(rng.sample(range(25), 8))
            c = Community.from_nodes(g, nodes, cid=1)
            k_in, k_out = community_degrees(g, nodes)
            assert c.k_in == pytest.approx(k_in)
            assert c.k_out == pytest.approx(k_out)
            assert c.k_in + c.k_out == pytest.approx(
                sum(g.weighted_degree[u] for u in nodes))

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 10_000), weighted=st.booleans())
    def test_random_walk_keeps_tallies_exact(self, seed, weighted):
        """Random add/remove sequence: tallies always equal the from-scratch oracle."""
        rng = random.Random(seed)
        n = rng.randint(4, 50)
        g = random_graph(rng, n, rng.uniform(0.05, 0.3), weighted=weighted)
        start = rng.randrange(n)
        c = Community.from_nodes(g, {start}, cid=0)
        for _ in range(40):
            can_grow = len(c.boundary) > 0
            if can_grow and (len(c.nodes) == 1 or rng.random() < 0.6):
                c.add_node(g, rng.choice(sorted(c.boundary)))
            elif len(c.nodes) >= 2:
                c.remove_node(g, rng.choice(sorted(c.nodes)))
            else:
                break
            k_in, k_out = brute_degrees(g, c.nodes)
            # integer weights make the float bookkeeping exact
            assert c.k_in == k_in
            assert c.k_out == k_out
            assert set(c.boundary_neighbors) == brute_boundary(g, c.nodes)
            assert set(c.internal) == c.nodes
            if all(w == 1.0 for w in (g.wgt or [1.0])):
                assert c.k_in == int(c.k_in) and int(c.k_in) % 2 == 0


class TestMembershipTable:
    def test_basic_updates(self):
        t = MembershipTable(4)
        membership_update(t, 2, 10, "add")
        assert t.communities_of(2) == (10,)
        membership_update(t, 2, 10, "add")  # idempotent
        assert t.communities_of(2) == (10,)
        membership_update(t, 2, 10, "remove")
        assert t.communities_of(2) == ()
        membership_update(t, 2, 99, "remove")  # removing absent id is a no-op

    def test_bad_op_rejected(self):
        t = MembershipTable(1)
        with pytest.raises(ValueError, match="add_or_remove"):
            membership_update(t, 0, 1, "toggle")

    def test_thread_safe_flag_off(self):
        t = MembershipTable(3, thread_safe=False)
        t.add(0, 5)
        assert t.communities_of(0) == (5,)

    def test_atomic_snapshots_are_prefixes(self):
        """A reader never sees a torn set while one writer grows it."""
        t = MembershipTable(1)
        done = threading.Event()
        bad = []

        def writer():
            for cid in range(400):
                t.add(0, cid)
            done.set()

        def reader():
            prev = frozenset()
            while not done.is_set():
                snap = frozenset(t.communities_of(0))
                if snap != set(range(len(snap))) or not (prev <= snap):
                    bad.append(snap)
                    return
                prev = snap

        rt = threading.Thread(target=reader)
        wt = threading.Thread(target=writer)
        rt.start()
        wt.start()
        wt.join(timeout=30)
        rt.join(timeout=30)
        assert not bad
        assert t.communities_of(0) == tuple(range(400))

    def test_concurrent_writers_distinct_nodes(self):
        t = MembershipTable(8)

        def worker(node):
            for cid in range(100):
                t.add(node, cid)
            for cid in range(0, 100, 2):
                t.remove(node, cid)

        threads = [threading.Thread(target=worker, args=(n,)) for n in range(8)]
        for th in threads:
            th.start()
        for th in threads:
            th.join(timeout=30)
        for n in range(8):
            assert t.communities_of(n) == tuple(range(1, 100, 2))


class TestRebuildMembership:
    def test_two_community_example(self):
        g = path(3)
        cover = Cover.from_node_sets(g, [{0, 1}, {1, 2}])
        t = rebuild_membership(cover, node_count=3)
        assert t.as_dict() == {0: {0}, 1: {0, 1}, 2: {1}}

    def test_empty_cover(self):
        t = rebuild_membership([], node_count=4)
        assert t.as_dict() == {}

    def test_single_all_community(self):
        g = triangle()
        cover = Cover.from_node_sets(g, [{0, 1, 2}])
        t = rebuild_membership(cover)
        assert t.as_dict() == {0: {0}, 1: {0}, 2: {0}}

    def test_left_inverse_of_updates(self):
        """Any update interleaving that lands on a cover = rebuild of the cover."""
        g = random_graph(random.Random(3), 10, 0.3)
        cover = Cover.from_node_sets(g, [{0, 1, 2}, {2, 3}, {5, 6, 7}])
        rng = random.Random(9)
        # per (node, cid) op sequence ending in the cover's net state
        sequences = []
        for c in cover:
            for node in c.nodes:
                ops = [(node, c.id, "add")]
                if node % 2:
                    ops = [(node, c.id, "add"), (node, c.id, "remove")] + ops
                sequences.append(ops)
        # churn on a pair that ends outside the cover
        sequences.append([(9, 0, "add"), (9, 0, "remove")])
        t = MembershipTable(10)
        while any(sequences):
            seq = rng.choice([s for s in sequences if s])
            node, cid, op = seq.pop(0)
            membership_update(t, node, cid, op)
        final = rebuild_membership(cover, node_count=10)
        assert t.as_dict() == final.as_dict()


class TestCover:
    def test_duplicate_ids_rejected(self):
        g = triangle()
        cover = Cover()
        cover.add(Community.from_nodes(g, {0}, cid=1))
        with pytest.raises(ValueError, match="duplicate community id"):
            cover.add(Community.from_nodes(g, {1}, cid=1))

    def test_identical_node_sets_collapsed(self):
        g = path(4)
        cover = Cover.from_node_sets(g, [{0, 1}, {1, 0}, {2, 3}])
        assert len(cover) == 2

    def test_empty_community_rejected(self):
        with pytest.raises(ValueError, match="empty community"):
            Cover.from_node_sets(triangle(), [set()])

    def test_snapshot_is_deep_and_sorted(self):
        g = path(4)
        cover = Cover.from_node_sets(g, [{2, 0, 1}], alpha=0.7)
        snap = cover.snapshot()
        assert snap.alpha == 0.7
        assert snap.community_count == 1
        assert snap.communities[0].nodes == (0, 1, 2)
        cover.communities[0].nodes.add(3)  # mutating the live cover
        assert snap.communities[0].nodes == (0, 1, 2)
        assert snap.node_union() == {0, 1, 2}


class TestCoverFiles:
    def test_round_trip_with_labels(self):
        buf = io.StringIO()
        write_cover(buf, [{2, 0}, {1}], labels=[10, 20, 30])
        text = buf.getvalue()
        assert text == "10 30\n20\n"
        assert read_cover(io.StringIO(text)) == [[10, 30], [20]]

    def test_line_order_ascending(self):
        buf = io.StringIO()
        write_cover(buf, [{5, 6}, {1, 9}, {1, 2}])
        assert buf.getvalue() == "1 2\n1 9\n5 6\n"

    def test_read_errors(self):
        with pytest.raises(ValueError, match="line 1.*not an integer"):
            read_cover(io.StringIO("1 x\n"))
        with pytest.raises(ValueError, match="line 2.*negative"):
            read_cover(io.StringIO("1 2\n-3\n"))
        with pytest.raises(ValueError, match="duplicate label"):
            read_cover(io.StringIO("4 4\n"))

    def test_read_skips_blank_and_comment(self):
        assert read_cover(io.StringIO("# c\n\n1 2\n")) == [[1, 2]]

    def test_read_path(self, tmp_path):
        p = tmp_path / "cover.txt"
        write_cover(str(p), [{3, 1}])
        assert read_cover(str(p)) == [[1, 3]]
