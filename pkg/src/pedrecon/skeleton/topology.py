"""Fixed 17-joint articulated skeleton topology.

A single tree rooted at the pelvis, with the hip span and the pelvis-thorax
span ("backbone") serving as scale anchors.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidInputError

PELVIS = 0
L_HIP = 1
R_HIP = 2
L_KNEE = 3
R_KNEE = 4
L_ANKLE = 5
R_ANKLE = 6
SPINE = 7
THORAX = 8
NECK = 9
HEAD = 10
L_SHOULDER = 11
R_SHOULDER = 12
L_ELBOW = 13
R_ELBOW = 14
L_WRIST = 15
R_WRIST = 16

JOINT_NAMES = (
    "pelvis", "l_hip", "r_hip", "l_knee", "r_knee", "l_ankle", "r_ankle",
    "spine", "thorax", "neck", "head", "l_shoulder", "r_shoulder",
    "l_elbow", "r_elbow", "l_wrist", "r_wrist",
)

JOINT_COUNT = len(JOINT_NAMES)

#: (parent, child) pairs in topological order (parents always placed first).
LIMBS = (
    (PELVIS, L_HIP),
    (PELVIS, R_HIP),
    (L_HIP, L_KNEE),
    (R_HIP, R_KNEE),
    (L_KNEE, L_ANKLE),
    (R_KNEE, R_ANKLE),
    (PELVIS, SPINE),
    (SPINE, THORAX),
    (THORAX, NECK),
    (NECK, HEAD),
    (THORAX, L_SHOULDER),
    (THORAX, R_SHOULDER),
    (L_SHOULDER, L_ELBOW),
    (R_SHOULDER, R_ELBOW),
    (L_ELBOW, L_WRIST),
    (R_ELBOW, R_WRIST),
)

LIMB_COUNT = len(LIMBS)


@dataclass(frozen=True)
class SkeletonTopology:
    joint_names: tuple[str, ...]
    limbs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = len(self.joint_names)
        if len(self.limbs) != n - 1:
            raise InvalidInputError(f"{n} joints require {n - 1} limbs, got {len(self.limbs)}")
        parents: dict[int, int] = {}
        for parent, child in self.limbs:
            if child in parents:
                raise InvalidInputError(f"joint {child} has two parents")
            if not (0 <= parent < n and 0 <= child < n):
                raise InvalidInputError(f"limb ({parent}, {child}) out of range")
            parents[child] = parent
        if PELVIS in parents:
            raise InvalidInputError("root joint must not have a parent")
        # Every non-root joint must reach the root: tree, not a forest.
        for joint in range(n):
            if joint == PELVIS:
                continue
            seen = set()
            node = joint
            while node != PELVIS:
                if node not in parents or node in seen:
                    raise InvalidInputError(f"joint {joint} is not connected to the root")
                seen.add(node)
                node = parents[node]

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)

    def children(self, joint: int) -> tuple[int, ...]:
        return tuple(c for p, c in self.limbs if p == joint)

    def subtree(self, joint: int) -> tuple[int, ...]:
        """Joint plus all of its descendants, in traversal order."""
        out = [joint]
        stack = [joint]
        while stack:
            node = stack.pop()
            for child in self.children(node):
                out.append(child)
                stack.append(child)
        return tuple(out)

    def limb_index(self, parent: int, child: int) -> int:
        return self.limbs.index((parent, child))


TOPOLOGY = SkeletonTopology(JOINT_NAMES, LIMBS)
