"""Straightforward per-stream encoder written with the readable building
blocks.  Slow; kept as an executable description of the bitstream that the
compiled encoder must reproduce bit for bit."""

from .coding import (RESIDUE_ESCAPE_BITS, BitWriter, RiceState, adapt, map_residue,
                     rice_encode, run_encode)
from .context import (block_observations, causal_template, predict_inter, predict_intra,
                      subimage, texture_vector)
from .core import microshift_quantize


def encode_plane_reference(plane, params, table):
    levels = microshift_quantize(plane, params).levels
    N = params.N
    streams = []
    for j in range(1, params.n_sub + 1):
        ri, ci = divmod(j - 1, N)
        sub = subimage(levels, j, N)
        w = BitWriter()
        reg, runs = RiceState(), RiceState()
        h, wd = sub.shape

        def regular(t, r, c):
            if j == 1:
                xhat = predict_intra(t, table)
            else:
                obs = block_observations(levels, r * N + ri, c * N + ci, params)
                xhat = predict_inter(obs, j, params)
            code = map_residue(int(sub[r, c]) - xhat, xhat, params.M)
            rice_encode(w, adapt(reg, code), code, RESIDUE_ESCAPE_BITS)

        for r in range(h):
            run = None
            for c in range(wd):
                t = causal_template(sub, r, c)
                if t.first:
                    regular(t, r, c)
                    continue
                x = int(sub[r, c])
                uniform = not any(texture_vector(t))
                if run is not None:
                    if uniform and x == t.B:
                        run += 1
                        continue
                    run_encode(w, runs, run)
                    run = None
                    regular(t, r, c)
                elif uniform and x == t.B:
                    run = 1
                elif uniform:
                    run_encode(w, runs, 0)
                    regular(t, r, c)
                else:
                    regular(t, r, c)
            if run is not None:
                run_encode(w, runs, run)
        streams.append(w.getvalue())
    return streams
