"""Hot cores for sequential projection-DPP sampling.

Two interchangeable implementations of the same algorithm live here:

* ``sample_replica_loop`` -- scalar loops, compiled with numba when active;
* ``sample_replica_numpy`` -- vectorized numpy with speculative proposal
  batches.

Both consume the pre-drawn uniform stream in identical order (4 uniforms per
proposal: envelope cell, radius within cell, angle, accept), so for a fixed
stream they produce bit-identical configurations. Status codes: >=0 number
of uniforms consumed, -1 uniform stream exhausted, -2 envelope violated,
-3 acceptance rate collapsed.
"""
import numpy as np

from ._accel import accelerate

# weight codes for the scalar core
WCODE_FOCK_RADIAL = 0
WCODE_BERGMAN = 1
WCODE_TABULATED = 2

_TRY_CAP = 2_000_000  # per sequential step; ~acceptance rate 5e-7


def _sample_replica_loop(B, ratios, inv_c0, wcode, wparam, wtab_r, wtab_logw,
                         cell_edges, cell_env, cell_cmass, uniforms,
                         out_re, out_im):
    k0, M = B.shape
    iu = 0
    total = cell_cmass[-1]
    ncell = cell_edges.shape[0] - 1
    v = np.empty(M, dtype=np.complex128)
    w = np.empty(k0, dtype=np.complex128)
    for step in range(k0):
        k = k0 - step
        tries = 0
        while True:
            tries += 1
            if tries > _TRY_CAP:
                return -3
            if iu + 4 > uniforms.shape[0]:
                return -1
            target = uniforms[iu] * total
            u_rad = uniforms[iu + 1]
            u_ang = uniforms[iu + 2]
            u_acc = uniforms[iu + 3]
            iu += 4
            lo = np.searchsorted(cell_cmass, target)
            if lo >= ncell:
                lo = ncell - 1
            r0 = cell_edges[lo]
            r1 = cell_edges[lo + 1]
            r = np.sqrt(r0 * r0 + u_rad * (r1 * r1 - r0 * r0))
            theta = 2.0 * np.pi * u_ang
            zre = r * np.cos(theta)
            zim = r * np.sin(theta)
            if wcode == WCODE_FOCK_RADIAL:
                sw = np.exp(-0.5 * r ** wparam)
            elif wcode == WCODE_BERGMAN:
                t = 1.0 - r * r
                if t < 0.0:
                    t = 0.0
                sw = t ** (0.5 * wparam)
            else:
                sw = np.exp(0.5 * np.interp(r, wtab_r, wtab_logw))
            z = complex(zre, zim)
            acc = complex(sw * inv_c0, 0.0)
            v[0] = acc
            for m in range(1, M):
                acc = acc * z * ratios[m - 1]
                v[m] = acc
            diag = 0.0
            for i in range(k):
                s = complex(0.0, 0.0)
                for m in range(M):
                    s += B[i, m] * v[m]
                w[i] = s
                diag += s.real * s.real + s.imag * s.imag
            env = cell_env[lo]
            if diag > env * (1.0 + 1e-9):
                return -2
            if u_acc * env < diag:
                out_re[step] = zre
                out_im[step] = zim
                break
        # Downdate: Householder sending w -> alpha*e1. Rows 1..k-1 of H B
        # then span exactly the functions of the current space vanishing at
        # the accepted point.
        if k > 1:
            nw = np.sqrt(diag)
            x0 = w[0]
            ax0 = abs(x0)
            if ax0 > 0.0:
                phase = x0 / ax0
            else:
                phase = complex(1.0, 0.0)
            alpha = -phase * nw
            u0 = x0 - alpha
            unorm2 = u0.real * u0.real + u0.imag * u0.imag
            for i in range(1, k):
                unorm2 += w[i].real * w[i].real + w[i].imag * w[i].imag
            if unorm2 > 0.0:
                scale = 2.0 / unorm2
                for m in range(M):
                    s = np.conj(u0) * B[0, m]
                    for i in range(1, k):
                        s += np.conj(w[i]) * B[i, m]
                    s *= scale
                    B[0, m] -= u0 * s
                    for i in range(1, k):
                        B[i, m] -= w[i] * s
            for i in range(k - 1):
                for m in range(M):
                    B[i, m] = B[i + 1, m]
    return iu


sample_replica_loop = accelerate(_sample_replica_loop)


def _sqrt_weight_vec(r, wcode, wparam, wtab_r, wtab_logw):
    if wcode == WCODE_FOCK_RADIAL:
        return np.exp(-0.5 * r ** wparam)
    if wcode == WCODE_BERGMAN:
        return np.clip(1.0 - r * r, 0.0, None) ** (0.5 * wparam)
    return np.exp(0.5 * np.interp(r, wtab_r, wtab_logw))


def sample_replica_numpy(B, ratios, inv_c0, wcode, wparam, wtab_r, wtab_logw,
                         cell_edges, cell_env, cell_cmass, uniforms,
                         out_re, out_im, batch=64):
    """Vectorized twin of the scalar core.

    Proposals are evaluated speculatively in batches but uniforms are only
    committed up to (and including) the first accepted proposal, which keeps
    the stream position identical to the scalar implementation.
    """
    k0, M = B.shape
    iu = 0
    nu = uniforms.shape[0]
    total = cell_cmass[-1]
    ncell = cell_edges.shape[0] - 1
    for step in range(k0):
        k = k0 - step
        Bk = B[:k]
        tries = 0
        accepted = False
        while not accepted:
            bs = min(batch, (nu - iu) // 4)
            if bs <= 0:
                return -1
            tries += bs
            if tries > _TRY_CAP:
                return -3
            u = uniforms[iu:iu + 4 * bs].reshape(bs, 4)
            lo = np.minimum(np.searchsorted(cell_cmass, u[:, 0] * total),
                            ncell - 1)
            r0 = cell_edges[lo]
            r1 = cell_edges[lo + 1]
            r = np.sqrt(r0 * r0 + u[:, 1] * (r1 * r1 - r0 * r0))
            theta = 2.0 * np.pi * u[:, 2]
            z = r * np.exp(1j * theta)
            sw = _sqrt_weight_vec(r, wcode, wparam, wtab_r, wtab_logw)
            V = np.empty((M, bs), dtype=np.complex128)
            V[0] = sw * inv_c0
            for m in range(1, M):
                V[m] = V[m - 1] * z * ratios[m - 1]
            W = Bk @ V
            diag = np.einsum("ij,ij->j", W, W.conj()).real
            env = cell_env[lo]
            acc = u[:, 3] * env < diag
            if not acc.any():
                if (diag > env * (1.0 + 1e-9)).any():
                    return -2
                iu += 4 * bs
                continue
            j0 = int(np.argmax(acc))
            if (diag[:j0 + 1] > env[:j0 + 1] * (1.0 + 1e-9)).any():
                return -2
            iu += 4 * (j0 + 1)
            out_re[step] = z[j0].real
            out_im[step] = z[j0].imag
            accepted = True
            if k > 1:
                w = W[:, j0]
                nw = np.sqrt(diag[j0])
                phase = w[0] / abs(w[0]) if abs(w[0]) > 0.0 else 1.0 + 0j
                uvec = w.copy()
                uvec[0] -= -phase * nw
                unorm2 = np.vdot(uvec, uvec).real
                if unorm2 > 0.0:
                    s = (uvec.conj() @ Bk) * (2.0 / unorm2)
                    Bk -= np.outer(uvec, s)
                B[:k - 1] = B[1:k]
    return iu
