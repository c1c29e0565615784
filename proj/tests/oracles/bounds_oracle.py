#!/usr/bin/env python3
"""Straight-line high-precision evaluation of the bound formulas.

Written independently of the C++ library; the printed values are frozen into
tests/bounds_test.cpp and tests/acceptance_test.cpp.
"""
from mpmath import mp, mpf, sqrt, log, e, exp, ceil

mp.dps = 50


def eps_hat(m, n, j, d):
    if d == 0:
        return mpf(1)
    if j == 0:
        v = sqrt(log(mpf(m) / d) / (2 * n))
    else:
        v = sqrt(log(mpf(m) / (d * j)) / (2 * n))
    return min(v, mpf(1))


def telescoping(m, n, s, js, ds):
    t = len(js)
    total = sum(js)
    out = (1 - total / mpf(s)) * eps_hat(m, n, total, ds[0])
    for h in range(1, t + 1):
        tail = sum(js[h:])
        out += (js[h - 1] / mpf(s)) * eps_hat(m, n, tail, ds[h])
    return out


def closed_form(n, s, delta, c):
    t = int(ceil(log(2 * mpf(n)) / (2 * c)))
    js = [s / exp(c * i) for i in range(1, t + 1)]
    ds = [(e - 1) * delta / exp(i) for i in range(1, t + 1)] + [mpf(0)]
    return t, js, ds


def epsilon_star(m, n, s, delta, c):
    t, js, ds = closed_form(n, s, delta, c)
    out = sum(exp(-c * (i - 1)) * eps_hat(m, n, js[i - 1], ds[i - 1]) for i in range(1, t + 1))
    return out + exp(-c * t) * eps_hat(m, n, 0, 0)


def analytic(m, n, s, delta, c):
    k = exp(c) / (exp(c) - 1)
    return (sqrt(log(mpf(m) / s) + log(1 / mpf(delta))) * k + sqrt(c + 1) * k**2 + 1) / sqrt(2 * mpf(n))


def show(name, v):
    print(f"{name:55s} {mp.nstr(v, 20)}")


d05 = mpf("0.05")
show("hoeffding(5000,0.05)", sqrt(log(1 / d05) / (2 * 5000)))
show("hoeffding(50,0.05)", sqrt(log(1 / d05) / (2 * 50)))
show("uniform(100,5000,0.05)", sqrt(log(100 / d05) / (2 * 5000)))
show("uniform(100,5,0.05)", sqrt(log(100 / d05) / (2 * 5)))
show("nearly_uniform(100,5000,0.05,j=10)", sqrt(log(100 / (d05 * 10)) / (2 * 5000)))
show("eps_hat(m=100,n=50,j=2,d=0.01)", eps_hat(100, 50, 2, mpf("0.01")))
show("ensemble_uniform(10,500,0.05)", sqrt(log(10 / d05) / (2 * 500)))
show("ens_nearly_uniform(1000,500,s=100,0.05,j=10)",
     (1 - mpf(10) / 100) * eps_hat(1000, 500, 10, d05) + mpf(10) / 100)
rates = [mpf("0.1"), mpf("0.2"), mpf("0.3"), mpf("0.4")]
show("observed(1000,500,s=4,0.05,j=2)",
     (1 - mpf(2) / 4) * eps_hat(1000, 500, 2, d05) + mpf(2) / 4 * (1 - (rates[0] + rates[1]) / 2))
show("telescoping(1000,500,100,(10,2),(.03,.015,.005))",
     telescoping(1000, 500, 100, [mpf(10), mpf(2)], [mpf("0.03"), mpf("0.015"), mpf("0.005")]))
t, js, ds = closed_form(500, 100, d05, mpf(3))
print("closed_form t(n=500,c=3)", t)
show("closed_form delta_1", ds[0])
show("closed_form delta_2", ds[1])
show("closed_form j_1 (s=100)", js[0])
show("closed_form j_2 (s=100)", js[1])
show("epsilon_star(1000,500,100,0.05,c=3)", epsilon_star(1000, 500, 100, d05, mpf(3)))
show("telescoping(closed_form(1000,500,100,0.05,c=3))", telescoping(1000, 500, 100, js, ds))
show("analytic(1000,500,100,0.05,c=3)", analytic(1000, 500, 100, d05, mpf(3)))
k3 = exp(3) / (exp(3) - 1)
show("K(c=3)", k3)
show("sqrt(4)K^2+1", 2 * k3**2 + 1)
show("analytic(m=1000,s=10,n=500,0.05,c=3)", analytic(1000, 500, 10, d05, mpf(3)))
