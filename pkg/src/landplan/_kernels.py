"""Compiled search cores for the grid planners.

Kept separate from the public planner API so the wrappers stay plain Python.
Node ids are flat indices (ix * ny + iy) * nz + iz over the occupancy array.
"""

from __future__ import annotations

import numpy as np
from numba import njit

UNREACHED = -1


@njit(cache=True)
def _sift_up(keys, nodes, i):
    while i > 0:
        p = (i - 1) // 2
        if keys[i] < keys[p]:
            keys[i], keys[p] = keys[p], keys[i]
            nodes[i], nodes[p] = nodes[p], nodes[i]
            i = p
        else:
            break


@njit(cache=True)
def _sift_down(keys, nodes, size):
    i = 0
    while True:
        l = 2 * i + 1
        r = l + 1
        m = i
        if l < size and keys[l] < keys[m]:
            m = l
        if r < size and keys[r] < keys[m]:
            m = r
        if m == i:
            break
        keys[i], keys[m] = keys[m], keys[i]
        nodes[i], nodes[m] = nodes[m], nodes[i]
        i = m


@njit(cache=True)
def astar_backward(occ, rx, ry, rz, ox, oy, oz,
                   root, target,
                   pm, pm_ox, pm_oy, pm_res,
                   wl, wp, wastar, h_scale, l_direct,
                   ax, ay, az, z_lo, z_hi):
    """Best-first search rooted at the goal cell, expanding toward the start.

    Edge cost between neighbor cell centers: dl * (wl + wp*(1-p)) / l_direct
    with p sampled from pm at the edge midpoint (0 outside the map). The
    heuristic is the scaled Euclidean distance to the anchor point (the start
    cell center) over l_direct; wastar = 0 disables it (uniform-cost search).

    Returns (found, cost_at_target, expansions, parent) where parent[n] is
    the next node from n toward the root.
    """
    nx, ny, nz = occ.shape
    n_cells = nx * ny * nz
    g = np.full(n_cells, np.inf)
    parent = np.full(n_cells, -1, np.int32)
    closed = np.zeros(n_cells, np.uint8)
    pm_nx, pm_ny = pm.shape

    moves = np.empty((26, 3), np.int64)
    dls = np.empty(26)
    m = 0
    for dix in range(-1, 2):
        for diy in range(-1, 2):
            for diz in range(-1, 2):
                if dix == 0 and diy == 0 and diz == 0:
                    continue
                moves[m, 0] = dix
                moves[m, 1] = diy
                moves[m, 2] = diz
                dls[m] = np.sqrt((dix * rx) ** 2 + (diy * ry) ** 2 + (diz * rz) ** 2)
                m += 1

    cap = 1024
    hkeys = np.empty(cap)
    hnodes = np.empty(cap, np.int64)
    size = 0

    g[root] = 0.0
    hkeys[0] = 0.0
    hnodes[0] = root
    size = 1

    expansions = 0
    found = False
    cost = np.inf
    while size > 0:
        node = hnodes[0]
        size -= 1
        hkeys[0] = hkeys[size]
        hnodes[0] = hnodes[size]
        _sift_down(hkeys, hnodes, size)
        if closed[node]:
            continue
        closed[node] = 1
        expansions += 1
        if node == target:
            found = True
            cost = g[node]
            break
        ix = node // (ny * nz)
        iy = (node // nz) % ny
        iz = node % nz
        gn = g[node]
        for k in range(26):
            jx = ix + moves[k, 0]
            jy = iy + moves[k, 1]
            jz = iz + moves[k, 2]
            if jx < 0 or jx >= nx or jy < 0 or jy >= ny or jz < z_lo or jz > z_hi:
                continue
            if occ[jx, jy, jz]:
                continue
            nid = (jx * ny + jy) * nz + jz
            if closed[nid]:
                continue
            p = 0.0
            mxw = ox + (ix + jx + 1.0) * 0.5 * rx
            myw = oy + (iy + jy + 1.0) * 0.5 * ry
            px = int(np.floor((mxw - pm_ox) / pm_res))
            py = int(np.floor((myw - pm_oy) / pm_res))
            if 0 <= px < pm_nx and 0 <= py < pm_ny:
                p = pm[px, py]
            ng = gn + dls[k] * (wl + wp * (1.0 - p)) / l_direct
            if ng < g[nid]:
                g[nid] = ng
                parent[nid] = node
                f = ng
                if wastar > 0.0:
                    cx = ox + (jx + 0.5) * rx
                    cy = oy + (jy + 0.5) * ry
                    cz = oz + (jz + 0.5) * rz
                    h = np.sqrt((cx - ax) ** 2 + (cy - ay) ** 2 + (cz - az) ** 2) / l_direct
                    f = ng + wastar * h_scale * h
                if size >= cap:
                    new_cap = cap * 2
                    nk = np.empty(new_cap)
                    nn = np.empty(new_cap, np.int64)
                    nk[:size] = hkeys[:size]
                    nn[:size] = hnodes[:size]
                    hkeys = nk
                    hnodes = nn
                    cap = new_cap
                hkeys[size] = f
                hnodes[size] = nid
                size += 1
                _sift_up(hkeys, hnodes, size - 1)
    return found, cost, expansions, parent


@njit(cache=True)
def wavefront(occ, goal, until, z_lo, z_hi):
    """Breadth-first hop-count field over free cells, grown from the goal.

    until >= 0 stops the propagation as soon as that node is labeled (early
    exit); pass -1 to label the whole reachable component. Returns the field
    (-1 marks unreached cells) and the number of dequeued nodes.
    """
    nx, ny, nz = occ.shape
    n_cells = nx * ny * nz
    field = np.full(n_cells, UNREACHED, np.int32)
    queue = np.empty(n_cells, np.int64)
    field[goal] = 0
    queue[0] = goal
    head = 0
    tail = 1
    dequeued = 0

    moves = np.empty((26, 3), np.int64)
    m = 0
    for dix in range(-1, 2):
        for diy in range(-1, 2):
            for diz in range(-1, 2):
                if dix == 0 and diy == 0 and diz == 0:
                    continue
                moves[m, 0] = dix
                moves[m, 1] = diy
                moves[m, 2] = diz
                m += 1

    done = until == goal
    while head < tail and not done:
        node = queue[head]
        head += 1
        dequeued += 1
        ix = node // (ny * nz)
        iy = (node // nz) % ny
        iz = node % nz
        v = field[node] + 1
        for k in range(26):
            jx = ix + moves[k, 0]
            jy = iy + moves[k, 1]
            jz = iz + moves[k, 2]
            if jx < 0 or jx >= nx or jy < 0 or jy >= ny or jz < z_lo or jz > z_hi:
                continue
            if occ[jx, jy, jz]:
                continue
            nid = (jx * ny + jy) * nz + jz
            if field[nid] == UNREACHED:
                field[nid] = v
                queue[tail] = nid
                tail += 1
                if nid == until:
                    done = True
                    break
    return field, dequeued
