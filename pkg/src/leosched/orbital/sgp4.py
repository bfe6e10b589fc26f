"""Near-Earth SGP4 propagation, vectorized over satellites and times.

Follows the Spacetrack Report #3 model in the revised form published with
the 2006 verification suite (WGS-72 constants, "improved" operation mode).
The deep-space (SDP4) branch is not implemented; records with periods of
225 minutes or more are rejected at initialization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .tle import TleRecord

# WGS-72
MU = 398600.8
RE = 6378.135
XKE = 60.0 / np.sqrt(RE**3 / MU)
J2 = 0.001082616
J3 = -0.00000253881
J4 = -0.00000165597
J3OJ2 = J3 / J2
VKMPERSEC = RE * XKE / 60.0
X2O3 = 2.0 / 3.0
TWOPI = 2.0 * np.pi
MINUTES_PER_DAY = 1440.0

# error codes
OK = 0
ERR_ECCENTRICITY = 1
ERR_MEAN_MOTION = 2
ERR_SEMILATUS = 4
ERR_DECAYED = 6

_ERROR_TEXT = {
    ERR_ECCENTRICITY: "mean eccentricity out of range",
    ERR_MEAN_MOTION: "mean motion non-positive",
    ERR_SEMILATUS: "semi-latus rectum negative",
    ERR_DECAYED: "satellite has decayed",
}


class PropagationError(RuntimeError):
    def __init__(self, norad_id: int, code: int, detail: str = ""):
        self.norad_id = norad_id
        self.code = code
        text = _ERROR_TEXT.get(code, detail or "propagation failed")
        super().__init__(f"satellite {norad_id}: {text}")


class DeepSpaceError(ValueError):
    pass


def _fmod2pi(x):
    # C fmod semantics: result keeps the sign of x
    return np.fmod(x, TWOPI)


@dataclass
class Sgp4Batch:
    """Initialized SGP4 constants for a batch of N satellites (arrays of shape (N,))."""

    norad_id: np.ndarray
    epoch_unix: np.ndarray
    bstar: np.ndarray
    ecco: np.ndarray
    argpo: np.ndarray
    inclo: np.ndarray
    mo: np.ndarray
    nodeo: np.ndarray
    no_unkozai: np.ndarray
    isimp: np.ndarray
    con41: np.ndarray
    x1mth2: np.ndarray
    x7thm1: np.ndarray
    cc1: np.ndarray
    cc4: np.ndarray
    cc5: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray
    delmo: np.ndarray
    eta: np.ndarray
    argpdot: np.ndarray
    omgcof: np.ndarray
    sinmao: np.ndarray
    t2cof: np.ndarray
    t3cof: np.ndarray
    t4cof: np.ndarray
    t5cof: np.ndarray
    xlcof: np.ndarray
    aycof: np.ndarray
    xmcof: np.ndarray
    mdot: np.ndarray
    nodecf: np.ndarray
    nodedot: np.ndarray

    def __len__(self) -> int:
        return len(self.norad_id)

    @classmethod
    def from_records(cls, records: Sequence[TleRecord]) -> "Sgp4Batch":
        deg = np.pi / 180.0
        n = len(records)
        f = lambda attr: np.array([getattr(r, attr) for r in records], dtype=float)  # noqa: E731
        return sgp4_init(
            norad_id=np.array([r.norad_id for r in records], dtype=np.int64).reshape(n),
            epoch_unix=f("epoch_unix").reshape(n),
            bstar=f("bstar").reshape(n),
            ecco=f("eccentricity").reshape(n),
            argpo=f("arg_perigee").reshape(n) * deg,
            inclo=f("inclination").reshape(n) * deg,
            mo=f("mean_anomaly").reshape(n) * deg,
            no_kozai=f("mean_motion").reshape(n) * TWOPI / MINUTES_PER_DAY,
            nodeo=f("raan").reshape(n) * deg,
        )

    def subset(self, idx) -> "Sgp4Batch":
        idx = np.atleast_1d(np.asarray(idx))
        return Sgp4Batch(**{k: v[idx] for k, v in self.__dict__.items()})

    def propagate_minutes(self, tsince):
        """Propagate by minutes since each satellite's epoch.

        A 1-D ``tsince`` holds one time per satellite; pass shape (1, T) or
        (N, T) for a time grid. Returns (r [km], v [km/s], err) with r, v
        shaped (..., 3).
        """
        return sgp4_propagate(self, np.asarray(tsince, dtype=float))

    def propagate_unix(self, t_unix):
        """Propagate to absolute unix times; ``t_unix`` of shape (T,) gives (N, T) output."""
        t = np.atleast_1d(np.asarray(t_unix, dtype=float))
        tsince = (t[None, :] - self.epoch_unix[:, None]) / 60.0
        return self.propagate_minutes(tsince)


def sgp4_init(*, norad_id, epoch_unix, bstar, ecco, argpo, inclo, mo, no_kozai, nodeo) -> Sgp4Batch:
    ss = 78.0 / RE + 1.0
    qzms2t = ((120.0 - 78.0) / RE) ** 4

    # initl
    eccsq = ecco * ecco
    omeosq = 1.0 - eccsq
    rteosq = np.sqrt(omeosq)
    cosio = np.cos(inclo)
    cosio2 = cosio * cosio
    ak = (XKE / no_kozai) ** X2O3
    d1 = 0.75 * J2 * (3.0 * cosio2 - 1.0) / (rteosq * omeosq)
    del_ = d1 / (ak * ak)
    adel = ak * (1.0 - del_ * del_ - del_ * (1.0 / 3.0 + 134.0 * del_ * del_ / 81.0))
    del_ = d1 / (adel * adel)
    no = no_kozai / (1.0 + del_)
    ao = (XKE / no) ** X2O3
    sinio = np.sin(inclo)
    po = ao * omeosq
    con42 = 1.0 - 5.0 * cosio2
    con41 = -con42 - cosio2 - cosio2
    posq = po * po
    rp = ao * (1.0 - ecco)

    period = TWOPI / no
    if np.any(period >= 225.0):
        bad = norad_id[period >= 225.0]
        raise DeepSpaceError(f"deep-space orbits not supported: {bad.tolist()}")

    isimp = (rp < (220.0 / RE + 1.0)).astype(np.int8)
    sfour = np.full_like(ao, ss)
    qzms24 = np.full_like(ao, qzms2t)
    perige = (rp - 1.0) * RE
    low = perige < 156.0
    if np.any(low):
        s4 = np.where(perige < 98.0, 20.0, perige - 78.0)
        qzms24 = np.where(low, ((120.0 - s4) / RE) ** 4, qzms24)
        sfour = np.where(low, s4 / RE + 1.0, sfour)
    pinvsq = 1.0 / posq
    tsi = 1.0 / (ao - sfour)
    eta = ao * ecco * tsi
    etasq = eta * eta
    eeta = ecco * eta
    psisq = np.abs(1.0 - etasq)
    coef = qzms24 * tsi**4
    coef1 = coef / psisq**3.5
    cc2 = coef1 * no * (
        ao * (1.0 + 1.5 * etasq + eeta * (4.0 + etasq))
        + 0.375 * J2 * tsi / psisq * con41 * (8.0 + 3.0 * etasq * (8.0 + etasq))
    )
    cc1 = bstar * cc2
    ecc_ok = ecco > 1.0e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        cc3 = np.where(ecc_ok, -2.0 * coef * tsi * J3OJ2 * no * sinio / ecco, 0.0)
    x1mth2 = 1.0 - cosio2
    cc4 = 2.0 * no * coef1 * ao * omeosq * (
        eta * (2.0 + 0.5 * etasq)
        + ecco * (0.5 + 2.0 * etasq)
        - J2 * tsi / (ao * psisq)
        * (
            -3.0 * con41 * (1.0 - 2.0 * eeta + etasq * (1.5 - 0.5 * eeta))
            + 0.75 * x1mth2 * (2.0 * etasq - eeta * (1.0 + etasq)) * np.cos(2.0 * argpo)
        )
    )
    cc5 = 2.0 * coef1 * ao * omeosq * (1.0 + 2.75 * (etasq + eeta) + eeta * etasq)
    cosio4 = cosio2 * cosio2
    temp1 = 1.5 * J2 * pinvsq * no
    temp2 = 0.5 * temp1 * J2 * pinvsq
    temp3 = -0.46875 * J4 * pinvsq * pinvsq * no
    mdot = (
        no
        + 0.5 * temp1 * rteosq * con41
        + 0.0625 * temp2 * rteosq * (13.0 - 78.0 * cosio2 + 137.0 * cosio4)
    )
    argpdot = (
        -0.5 * temp1 * con42
        + 0.0625 * temp2 * (7.0 - 114.0 * cosio2 + 395.0 * cosio4)
        + temp3 * (3.0 - 36.0 * cosio2 + 49.0 * cosio4)
    )
    xhdot1 = -temp1 * cosio
    nodedot = xhdot1 + (0.5 * temp2 * (4.0 - 19.0 * cosio2) + 2.0 * temp3 * (3.0 - 7.0 * cosio2)) * cosio
    omgcof = bstar * cc3 * np.cos(argpo)
    with np.errstate(divide="ignore", invalid="ignore"):
        xmcof = np.where(ecc_ok, -X2O3 * coef * bstar / eeta, 0.0)
    nodecf = 3.5 * omeosq * xhdot1 * cc1
    t2cof = 1.5 * cc1
    denom = np.where(np.abs(cosio + 1.0) > 1.5e-12, 1.0 + cosio, 1.5e-12)
    xlcof = -0.25 * J3OJ2 * sinio * (3.0 + 5.0 * cosio) / denom
    aycof = -0.5 * J3OJ2 * sinio
    delmo = (1.0 + eta * np.cos(mo)) ** 3
    sinmao = np.sin(mo)
    x7thm1 = 7.0 * cosio2 - 1.0

    cc1sq = cc1 * cc1
    d2 = 4.0 * ao * tsi * cc1sq
    temp = d2 * tsi * cc1 / 3.0
    d3 = (17.0 * ao + sfour) * temp
    d4 = 0.5 * temp * ao * tsi * (221.0 * ao + 31.0 * sfour) * cc1
    t3cof = d2 + 2.0 * cc1sq
    t4cof = 0.25 * (3.0 * d3 + cc1 * (12.0 * d2 + 10.0 * cc1sq))
    t5cof = 0.2 * (3.0 * d4 + 12.0 * cc1 * d3 + 6.0 * d2 * d2 + 15.0 * cc1sq * (2.0 * d2 + cc1sq))
    simple = isimp == 1
    zero = np.zeros_like(ao)
    d2, d3, d4, t3cof, t4cof, t5cof = (np.where(simple, zero, a) for a in (d2, d3, d4, t3cof, t4cof, t5cof))

    return Sgp4Batch(
        norad_id=norad_id,
        epoch_unix=epoch_unix,
        bstar=bstar,
        ecco=ecco,
        argpo=argpo,
        inclo=inclo,
        mo=mo,
        nodeo=nodeo,
        no_unkozai=no,
        isimp=isimp,
        con41=con41,
        x1mth2=x1mth2,
        x7thm1=x7thm1,
        cc1=cc1,
        cc4=cc4,
        cc5=cc5,
        d2=d2,
        d3=d3,
        d4=d4,
        delmo=delmo,
        eta=eta,
        argpdot=argpdot,
        omgcof=omgcof,
        sinmao=sinmao,
        t2cof=t2cof,
        t3cof=t3cof,
        t4cof=t4cof,
        t5cof=t5cof,
        xlcof=xlcof,
        aycof=aycof,
        xmcof=xmcof,
        mdot=mdot,
        nodecf=nodecf,
        nodedot=nodedot,
    )


def sgp4_propagate(s: Sgp4Batch, t):
    n = len(s)
    if t.ndim == 0:
        t = np.full((n,), float(t))
    extra = t.ndim - 1
    shape = np.broadcast_shapes((n,) + (1,) * extra, t.shape)
    t = np.broadcast_to(t, shape)

    def c(a):
        return a.reshape((n,) + (1,) * extra)

    xmdf = c(s.mo) + c(s.mdot) * t
    argpdf = c(s.argpo) + c(s.argpdot) * t
    nodedf = c(s.nodeo) + c(s.nodedot) * t
    t2 = t * t
    nodem = nodedf + c(s.nodecf) * t2
    tempa = 1.0 - c(s.cc1) * t
    tempe = c(s.bstar) * c(s.cc4) * t
    templ = c(s.t2cof) * t2

    full = c(s.isimp) != 1
    delomg = c(s.omgcof) * t
    delmtemp = 1.0 + c(s.eta) * np.cos(xmdf)
    delm = c(s.xmcof) * (delmtemp**3 - c(s.delmo))
    tmp = delomg + delm
    mm = np.where(full, xmdf + tmp, xmdf)
    argpm = np.where(full, argpdf - tmp, argpdf)
    t3 = t2 * t
    t4 = t3 * t
    tempa = np.where(full, tempa - c(s.d2) * t2 - c(s.d3) * t3 - c(s.d4) * t4, tempa)
    tempe = np.where(full, tempe + c(s.bstar) * c(s.cc5) * (np.sin(mm) - c(s.sinmao)), tempe)
    templ = np.where(full, templ + c(s.t3cof) * t3 + t4 * (c(s.t4cof) + t * c(s.t5cof)), templ)

    err = np.zeros(shape, dtype=np.int8)
    nm = np.broadcast_to(c(s.no_unkozai), shape)
    err[nm <= 0.0] = ERR_MEAN_MOTION
    with np.errstate(invalid="ignore", divide="ignore"):
        am = (XKE / nm) ** X2O3 * tempa * tempa
        nm = XKE / am**1.5
    em = c(s.ecco) - tempe
    err[((em >= 1.0) | (em < -0.001)) & (err == 0)] = ERR_ECCENTRICITY
    em = np.where(em < 1.0e-6, 1.0e-6, em)
    mm = mm + c(s.no_unkozai) * templ
    xlm = mm + argpm + nodem
    nodem = _fmod2pi(nodem)
    argpm = _fmod2pi(argpm)
    xlm = _fmod2pi(xlm)
    mm = _fmod2pi(xlm - argpm - nodem)

    inclm = np.broadcast_to(c(s.inclo), shape)
    sinip = np.sin(inclm)
    cosip = np.cos(inclm)

    # long-period periodics
    axnl = em * np.cos(argpm)
    with np.errstate(invalid="ignore", divide="ignore"):
        temp = 1.0 / (am * (1.0 - em * em))
    aynl = em * np.sin(argpm) + temp * c(s.aycof)
    xl = mm + argpm + nodem + temp * c(s.xlcof) * axnl

    # Kepler's equation
    u = _fmod2pi(xl - nodem)
    eo1 = u.copy()
    tem5 = np.full(shape, 9999.9)
    sineo1 = np.zeros(shape)
    coseo1 = np.zeros(shape)
    active = np.ones(shape, dtype=bool)
    for _ in range(10):
        active &= np.abs(tem5) >= 1.0e-12
        if not active.any():
            break
        sineo1 = np.where(active, np.sin(eo1), sineo1)
        coseo1 = np.where(active, np.cos(eo1), coseo1)
        with np.errstate(invalid="ignore", divide="ignore"):
            step = (u - aynl * coseo1 + axnl * sineo1 - eo1) / (1.0 - coseo1 * axnl - sineo1 * aynl)
        step = np.clip(step, -0.95, 0.95)
        tem5 = np.where(active, step, tem5)
        eo1 = np.where(active, eo1 + step, eo1)

    # short-period preliminaries
    ecose = axnl * coseo1 + aynl * sineo1
    esine = axnl * sineo1 - aynl * coseo1
    el2 = axnl * axnl + aynl * aynl
    pl = am * (1.0 - el2)
    err[(pl < 0.0) & (err == 0)] = ERR_SEMILATUS
    with np.errstate(invalid="ignore", divide="ignore"):
        rl = am * (1.0 - ecose)
        rdotl = np.sqrt(am) * esine / rl
        rvdotl = np.sqrt(pl) / rl
        betal = np.sqrt(1.0 - el2)
        temp = esine / (1.0 + betal)
        sinu = am / rl * (sineo1 - aynl - axnl * temp)
        cosu = am / rl * (coseo1 - axnl + aynl * temp)
        su = np.arctan2(sinu, cosu)
        sin2u = (cosu + cosu) * sinu
        cos2u = 1.0 - 2.0 * sinu * sinu
        temp = 1.0 / pl
        temp1 = 0.5 * J2 * temp
        temp2 = temp1 * temp

        mrt = rl * (1.0 - 1.5 * temp2 * betal * c(s.con41)) + 0.5 * temp1 * c(s.x1mth2) * cos2u
        su = su - 0.25 * temp2 * c(s.x7thm1) * sin2u
        xnode = nodem + 1.5 * temp2 * cosip * sin2u
        xinc = inclm + 1.5 * temp2 * cosip * sinip * cos2u
        mvt = rdotl - nm * temp1 * c(s.x1mth2) * sin2u / XKE
        rvdot = rvdotl + nm * temp1 * (c(s.x1mth2) * cos2u + 1.5 * c(s.con41)) / XKE

    sinsu, cossu = np.sin(su), np.cos(su)
    snod, cnod = np.sin(xnode), np.cos(xnode)
    sini, cosi = np.sin(xinc), np.cos(xinc)
    xmx = -snod * cosi
    xmy = cnod * cosi
    ux = xmx * sinsu + cnod * cossu
    uy = xmy * sinsu + snod * cossu
    uz = sini * sinsu
    vx = xmx * cossu - cnod * sinsu
    vy = xmy * cossu - snod * sinsu
    vz = sini * cossu

    r = np.stack([ux, uy, uz], axis=-1) * (mrt * RE)[..., None]
    v = (
        np.stack([ux, uy, uz], axis=-1) * mvt[..., None]
        + np.stack([vx, vy, vz], axis=-1) * rvdot[..., None]
    ) * VKMPERSEC
    err[(mrt < 1.0) & (err == 0)] = ERR_DECAYED
    bad = err != 0
    if bad.any():
        r[bad] = np.nan
        v[bad] = np.nan
    return r, v, err
