import pytest

from backend.load_data import build_workspace
from backend.tools.free_group import FreeGroupBallAction, is_cyclically_reduced, letters, to_element
from backend.tools.generators import free_group_document
from backend.tools.group_actions import small_cancellation_report, validate_rotation_family


@pytest.fixture(scope="module")
def ball():
    return FreeGroupBallAction(6)


class TestBall:
    def test_size(self, ball):
        assert len(ball) == 1457
        assert ball.graph.is_tree

    def test_breadth_first_indexing(self, ball):
        assert [ball.point(w) for w in ["1", "a", "a^-1", "b", "b^-1"]] == [0, 1, 2, 3, 4]
        assert ball.label(0) == "1"
        assert ball.label(ball.point("ab^-1a")) == "ab^-1a"

    def test_outside_the_ball(self, ball):
        with pytest.raises(ValueError, match="outside"):
            ball.point("a^7")

    def test_radius_must_be_positive(self):
        with pytest.raises(ValueError):
            FreeGroupBallAction(0)

    def test_images(self, ball):
        images = ball.images(ball.element("a"))
        assert images[0] == ball.point("a")
        assert images[ball.point("a^-1b")] == ball.point("b")
        assert images[ball.point("a^6")] == -1
        assert ball.images(ball.element("a^13")).max() == -1

    def test_boundary(self, ball):
        assert ball.on_boundary(ball.point("ab^2a^-1ba"))
        assert not ball.on_boundary(0)

    def test_letters(self):
        assert letters(to_element("ab^-1")) == (1, -2)


class TestAxes:
    def test_axis_of_relator(self, ball):
        axis = ball.axis("ababab")
        assert len(axis) == 13
        assert axis[0] == ()
        assert (1, 2, 1) in axis and (-2, -1) in axis

    def test_power_shares_the_axis(self, ball):
        assert ball.axis("ababab") == ball.axis("ab")

    @pytest.mark.parametrize("relator", ["aba^-1", "1"])
    def test_relator_must_be_cyclically_reduced(self, ball, relator):
        assert not is_cyclically_reduced(relator)
        with pytest.raises(ValueError):
            ball.axis(relator)

    def test_translate(self, ball):
        axis = ball.axis("ab")
        assert ball.translate(ball.identity, axis) == frozenset(ball.point(w) for w in [
            "1", "a", "ab", "aba", "abab", "ababa", "ababab",
            "b^-1", "b^-1a^-1", "b^-1a^-1b^-1", "b^-1a^-1b^-1a^-1", "b^-1a^-1b^-1a^-1b^-1", "b^-1a^-1b^-1a^-1b^-1a^-1",
        ])
        shifted = ball.translate(to_element("a^-1"), axis)
        assert ball.point("1") in shifted and ball.point("a^-1") in shifted


class TestDemoPipeline:
    def test_relator_axes_satisfy_the_hypotheses(self):
        workspace = build_workspace(free_group_document(6, "ababab"))
        family = validate_rotation_family(workspace.action, workspace.pairs, workspace.declared)
        report = small_cancellation_report(workspace.graph, workspace.action, family, 0.1, 0.5, 1.0, 0.1, centers=2)
        assert report.delta == 0.0
        assert report.rho == 6.0
        assert report.largest_piece <= 1.0
        assert report.passes
        assert len(report.local_deltas) == 2
