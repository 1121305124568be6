"""Planar rigid-body scenes and their contact-problem assembly.

A scene holds bodies (disks or polygons), environment half-planes, contact
declarations, an initial generalized velocity, and default run parameters.
From a scene and a pose vector this module evaluates signed gap functions
and contact Jacobians, and assembles the :class:`~multimpact.contact.ImpactProblem`
used by the resolution and sampling layers.

Two scene kinds exist:

- ``"rigid"``: free planar bodies, 3 coordinates each ``(x, y, theta)``;
- ``"linkage"``: a two-legged point-mass walker with coordinates
  ``(x_hip, y_hip, phi_leg0, phi_leg1)``; angles measured from the
  downward vertical, feet touch a flat floor.

Sign conventions: positive rotation is counterclockwise; a contact normal
points in the direction of increasing gap for the owning body; the tangent
is the normal rotated a quarter turn counterclockwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .contact import ImpactProblem

__all__ = [
    "PlanarBody",
    "HalfPlane",
    "ContactSpec",
    "Scene",
    "gap",
    "contact_jacobians",
    "build_problem",
    "build_example",
    "build_ball",
    "reflect_map",
    "list_examples",
    "load_scene",
    "scene_from_dict",
    "scene_to_dict",
]

EXAMPLE_NAMES = ("phone", "compass", "box_wall", "disk_stack")


def _rot(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def _perp(vec: np.ndarray) -> np.ndarray:
    """Quarter-turn counterclockwise: (x, y) -> (-y, x)."""
    return np.array([-vec[1], vec[0]])


@dataclass
class PlanarBody:
    """A free planar rigid body with a disk or polygon collision shape."""

    name: str
    mass: float
    inertia: float
    shape: dict  # {"type": "disk", "radius": r} | {"type": "polygon", "vertices": [[x,y],..]}
    pose: np.ndarray  # (3,) initial (x, y, theta)

    def __post_init__(self) -> None:
        self.pose = np.asarray(self.pose, dtype=float)
        if self.pose.shape != (3,):
            raise ValueError("body pose must be (x, y, theta)")
        if self.mass <= 0 or self.inertia <= 0:
            raise ValueError("body mass and inertia must be positive")


@dataclass
class HalfPlane:
    """Static environment geometry: points on the allowed side satisfy
    ``normal . (p - point) >= 0``."""

    name: str
    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self) -> None:
        self.point = np.asarray(self.point, dtype=float)
        normal = np.asarray(self.normal, dtype=float)
        self.normal = normal / np.linalg.norm(normal)


@dataclass
class ContactSpec:
    """One declared contact.

    kind: "vertex-plane" (polygon vertex against a half-plane),
    "disk-plane", or "disk-disk" (body against another body).
    """

    label: str
    mu: float
    kind: str
    body: int
    plane: str | None = None
    vertex: int | None = None
    against: int | None = None
    leg: int | None = None  # linkage scenes: which leg's foot


@dataclass
class Scene:
    """A complete scenario: geometry, contacts, initial state, defaults."""

    name: str
    kind: str  # "rigid" | "linkage"
    bodies: list[PlanarBody] = field(default_factory=list)
    environment: list[HalfPlane] = field(default_factory=list)
    contacts: list[ContactSpec] = field(default_factory=list)
    v0: np.ndarray = field(default_factory=lambda: np.zeros(0))
    defaults: dict = field(default_factory=dict)
    linkage: dict | None = None
    pose: np.ndarray | None = None  # linkage initial coordinates

    def __post_init__(self) -> None:
        self.v0 = np.asarray(self.v0, dtype=float)
        if self.pose is not None:
            self.pose = np.asarray(self.pose, dtype=float)

    @property
    def n_v(self) -> int:
        if self.kind == "linkage":
            return 4
        return 3 * len(self.bodies)

    def initial_pose(self) -> np.ndarray:
        if self.kind == "linkage":
            return self.pose.copy()
        return np.concatenate([b.pose for b in self.bodies])


# ---------------------------------------------------------------------------
# Geometry for "rigid" scenes


def _world_vertex(body: PlanarBody, q_body: np.ndarray, index: int) -> np.ndarray:
    local = np.asarray(body.shape["vertices"][index], dtype=float)
    return q_body[:2] + _rot(q_body[2]) @ local

def _plane(scene: Scene, name: str) -> HalfPlane:
    for plane in scene.environment:
        if plane.name == name:
            return plane
    raise KeyError(f"no environment plane named {name!r}")


def _contact_geometry(
    scene: Scene, spec: ContactSpec, q: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Returns (gap, world contact point, world normal) for one contact.
    The normal points in the separating direction of ``spec.body``."""
    qb = q[3 * spec.body : 3 * spec.body + 3]
    body = scene.bodies[spec.body]
    if spec.kind == "vertex-plane":
        plane = _plane(scene, spec.plane)
        point = _world_vertex(body, qb, spec.vertex)
        value = float(plane.normal @ (point - plane.point))
        return value, point, plane.normal.copy()
    if spec.kind == "disk-plane":
        plane = _plane(scene, spec.plane)
        radius = float(body.shape["radius"])
        value = float(plane.normal @ (qb[:2] - plane.point)) - radius
        point = qb[:2] - radius * plane.normal
        return value, point, plane.normal.copy()
    if spec.kind == "disk-disk":
        qa = q[3 * spec.against : 3 * spec.against + 3]
        other = scene.bodies[spec.against]
        r_b = float(body.shape["radius"])
        r_a = float(other.shape["radius"])
        delta = qb[:2] - qa[:2]
        dist = float(np.linalg.norm(delta))
        normal = delta / dist
        value = dist - r_a - r_b
        point = qa[:2] + r_a * normal
        return value, point, normal
    raise ValueError(f"unknown contact kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# Geometry for the "linkage" walker


def _linkage_feet(scene: Scene, q: np.ndarray) -> np.ndarray:
    length = float(scene.linkage["leg_length"])
    hip = q[:2]
    feet = np.empty((2, 2))
    for leg in range(2):
        phi = q[2 + leg]
        feet[leg] = hip + length * np.array([np.sin(phi), -np.cos(phi)])
    return feet


def _linkage_mass(scene: Scene, q: np.ndarray) -> np.ndarray:
    """Closed-form mass matrix: two point masses, one per leg, at offset
    ``a = leg_length - mass_offset`` below the hip along each leg."""
    length = float(scene.linkage["leg_length"])
    offset = length - float(scene.linkage["mass_offset"])
    leg_mass = float(scene.linkage["leg_mass"])
    phi0, phi1 = q[2], q[3]
    mass = np.zeros((4, 4))
    mass[0, 0] = mass[1, 1] = 2.0 * leg_mass
    for leg, phi in ((0, phi0), (1, phi1)):
        col = 2 + leg
        mass[0, col] = mass[col, 0] = leg_mass * offset * np.cos(phi)
        mass[1, col] = mass[col, 1] = leg_mass * offset * np.sin(phi)
        mass[col, col] = leg_mass * offset**2
    return mass


# ---------------------------------------------------------------------------
# Public geometry API


def gap(scene: Scene, q: np.ndarray) -> np.ndarray:
    """Signed separation distance of every declared contact at pose ``q``."""
    q = np.asarray(q, dtype=float)
    if scene.kind == "linkage":
        feet = _linkage_feet(scene, q)
        return np.array([feet[spec.leg][1] for spec in scene.contacts])
    return np.array([_contact_geometry(scene, spec, q)[0] for spec in scene.contacts])


def contact_jacobians(scene: Scene, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normal and tangential contact Jacobians at pose ``q``.

    Returns ``(jn, jt)`` of shapes ``(m, n_v)``; row i of ``jn`` is the
    gradient of contact i's gap, and row i of ``jt`` maps velocity to slip
    rate along the counterclockwise-rotated normal.
    """
    q = np.asarray(q, dtype=float)
    m = len(scene.contacts)
    jn = np.zeros((m, scene.n_v))
    jt = np.zeros((m, scene.n_v))

    if scene.kind == "linkage":
        length = float(scene.linkage["leg_length"])
        for i, spec in enumerate(scene.contacts):
            phi = q[2 + spec.leg]
            col = 2 + spec.leg
            # foot = hip + length (sin phi, -cos phi); gap = foot_y
            jn[i, 1] = 1.0
            jn[i, col] = length * np.sin(phi)
            # tangent = perp((0,1)) = (-1, 0); slip = -foot_x rate
            jt[i, 0] = -1.0
            jt[i, col] = -length * np.cos(phi)
        return jn, jt

    for i, spec in enumerate(scene.contacts):
        _, point, normal = _contact_geometry(scene, spec, q)
        tangent = _perp(normal)
        qb = q[3 * spec.body : 3 * spec.body + 3]
        sb = slice(3 * spec.body, 3 * spec.body + 3)
        jn[i, sb] = [normal[0], normal[1], normal @ _perp(point - qb[:2])]
        jt[i, sb] = [tangent[0], tangent[1], tangent @ _perp(point - qb[:2])]
        if spec.kind == "disk-disk":
            qa = q[3 * spec.against : 3 * spec.against + 3]
            sa = slice(3 * spec.against, 3 * spec.against + 3)
            jn[i, sa] = [-normal[0], -normal[1], -normal @ _perp(point - qa[:2])]
            jt[i, sa] = [-tangent[0], -tangent[1], -tangent @ _perp(point - qa[:2])]
    return jn, jt


def mass_matrix(scene: Scene, q: np.ndarray | None = None) -> np.ndarray:
    """Generalized mass matrix (pose-dependent only for linkage scenes)."""
    if scene.kind == "linkage":
        if q is None:
            q = scene.initial_pose()
        return _linkage_mass(scene, np.asarray(q, dtype=float))
    blocks = []
    for body in scene.bodies:
        blocks.append(np.diag([body.mass, body.mass, body.inertia]))
    out = np.zeros((scene.n_v, scene.n_v))
    for i, blk in enumerate(blocks):
        out[3 * i : 3 * i + 3, 3 * i : 3 * i + 3] = blk
    return out


def build_problem(
    scene: Scene, q: np.ndarray | None = None
) -> tuple[ImpactProblem, np.ndarray, dict]:
    """Assemble the impact problem at pose ``q`` (default: the scene pose).

    Returns ``(problem, v0, meta)`` where meta carries the scene name and
    default run parameters (per-step impulse budget ``h``, step cap
    ``n_steps``, trajectory count ``m_trajectories``).
    """
    if q is None:
        q = scene.initial_pose()
    jn, jt = contact_jacobians(scene, q)
    jd = np.empty((2 * jn.shape[0], scene.n_v))
    jd[0::2] = jt
    jd[1::2] = -jt
    problem = ImpactProblem(
        mass=mass_matrix(scene, q),
        jn=jn,
        jd=jd,
        mu=np.array([spec.mu for spec in scene.contacts]),
        labels=tuple(spec.label for spec in scene.contacts),
    )
    meta = {"name": scene.name, "scene": scene, **scene.defaults}
    return problem, scene.v0.copy(), meta


# ---------------------------------------------------------------------------
# Bundled examples


def _bundled_text(name: str) -> str:
    return (resources.files("multimpact") / "data" / f"{name}.json").read_text()


def list_examples() -> tuple[str, ...]:
    return EXAMPLE_NAMES


def load_scene(source: str | Path | dict) -> Scene:
    """Load a scene from a dict, a JSON file path, or a bundled name."""
    if isinstance(source, dict):
        return scene_from_dict(source)
    text = str(source)
    if text in EXAMPLE_NAMES:
        return scene_from_dict(json.loads(_bundled_text(text)))
    return scene_from_dict(json.loads(Path(source).read_text()))


def build_example(name: str) -> tuple[ImpactProblem, np.ndarray, dict]:
    """Assemble one of the bundled scenarios by name."""
    if name == "ball":
        return build_ball()
    if name not in EXAMPLE_NAMES:
        raise KeyError(
            f"unknown example {name!r}; available: {', '.join(EXAMPLE_NAMES)} and 'ball'"
        )
    return build_problem(load_scene(name))


def build_ball() -> tuple[ImpactProblem, np.ndarray, dict]:
    """Minimal single-coordinate test case: a unit point mass dropping onto
    the floor at unit speed, with a degenerate (zero) tangential direction
    standing in for the frictionless tangent."""
    problem = ImpactProblem(
        mass=np.array([[1.0]]),
        jn=np.array([[1.0]]),
        jd=np.array([[0.0], [0.0]]),
        mu=np.array([1.0]),
        labels=("ball",),
    )
    meta = {"name": "ball", "h": 1.0, "n_steps": 10, "m_trajectories": 4096}
    return problem, np.array([-1.0]), meta


def reflect_map(name: str) -> np.ndarray:
    """Velocity-space involution of a mirror-symmetric bundled scene.

    For the flat-falling phone the map negates horizontal and angular
    velocity; for the disk stack it additionally swaps the two bottom
    disks.  Asymmetric scenes raise ValueError.
    """
    flip = np.diag([-1.0, 1.0, -1.0])
    if name == "phone":
        return flip.copy()
    if name == "disk_stack":
        out = np.zeros((9, 9))
        out[0:3, 3:6] = flip  # left <- mirrored right
        out[3:6, 0:3] = flip  # right <- mirrored left
        out[6:9, 6:9] = flip
        return out
    if name in EXAMPLE_NAMES:
        raise ValueError(f"scene {name!r} is not mirror-symmetric")
    raise KeyError(f"unknown example {name!r}")


# ---------------------------------------------------------------------------
# Serialization


def scene_to_dict(scene: Scene) -> dict:
    data: dict = {
        "format": "multimpact-scene v1",
        "name": scene.name,
        "kind": scene.kind,
        "v0": scene.v0.tolist(),
        "defaults": dict(scene.defaults),
    }
    if scene.kind == "linkage":
        data["linkage"] = dict(scene.linkage)
        data["pose"] = scene.pose.tolist()
        data["contacts"] = [
            {"label": c.label, "mu": c.mu, "leg": c.leg} for c in scene.contacts
        ]
        return data
    data["bodies"] = [
        {
            "name": b.name,
            "mass": b.mass,
            "inertia": b.inertia,
            "shape": b.shape,
            "pose": b.pose.tolist(),
        }
        for b in scene.bodies
    ]
    data["environment"] = [
        {"name": p.name, "point": p.point.tolist(), "normal": p.normal.tolist()}
        for p in scene.environment
    ]
    contacts = []
    for c in scene.contacts:
        entry: dict = {"label": c.label, "mu": c.mu, "kind": c.kind, "body": c.body}
        if c.plane is not None:
            entry["plane"] = c.plane
        if c.vertex is not None:
            entry["vertex"] = c.vertex
        if c.against is not None:
            entry["against"] = c.against
        contacts.append(entry)
    data["contacts"] = contacts
    return data


def scene_from_dict(data: dict) -> Scene:
    kind = data.get("kind", "rigid")
    if kind == "linkage":
        contacts = [
            ContactSpec(label=c["label"], mu=float(c["mu"]), kind="foot-plane",
                        body=0, leg=int(c["leg"]))
            for c in data["contacts"]
        ]
        return Scene(
            name=data["name"],
            kind="linkage",
            contacts=contacts,
            v0=np.array(data["v0"], dtype=float),
            defaults=dict(data.get("defaults", {})),
            linkage=dict(data["linkage"]),
            pose=np.array(data["pose"], dtype=float),
        )
    bodies = [
        PlanarBody(
            name=b["name"],
            mass=float(b["mass"]),
            inertia=float(b["inertia"]),
            shape=b["shape"],
            pose=np.array(b["pose"], dtype=float),
        )
        for b in data["bodies"]
    ]
    environment = [
        HalfPlane(name=p["name"], point=np.array(p["point"]), normal=np.array(p["normal"]))
        for p in data.get("environment", [])
    ]
    contacts = [
        ContactSpec(
            label=c["label"],
            mu=float(c["mu"]),
            kind=c["kind"],
            body=int(c["body"]),
            plane=c.get("plane"),
            vertex=c.get("vertex"),
            against=c.get("against"),
        )
        for c in data["contacts"]
    ]
    return Scene(
        name=data["name"],
        kind="rigid",
        bodies=bodies,
        environment=environment,
        contacts=contacts,
        v0=np.array(data["v0"], dtype=float),
        defaults=dict(data.get("defaults", {})),
    )
