"""Numerical report on the stability hypotheses for the nonlinear preset.

Prints the drift profile, the local Doeblin constants on D, the
environment averages along one path and the resulting constants.
"""
from vstab import Fn, ModelSpec, io
from vstab.cli import check_assumptions_report

model = ModelSpec.nonlinear(Fn("linear", (-0.5,)), 1.0, Fn("identity"))
rep = check_assumptions_report(model, ybar=4.6, c=1.0, n=500, seed=0)

e = rep["E_conditions"]
print("E1 / E2 / E3:", e["E1"]["pass"], e["E2"]["pass"], e["E3"]["pass"])
print("drift: d_under = {d_under:.4f}, D = {D}, M = {M_const:.4f}".format(**rep["drift"]))
ld = rep["ld_D"]
print(f"LD on D: eps~- = {ld['eps_minus_tilde']:.4f}, eps~+ = {ld['eps_plus_tilde']:.4f}, rho_Cd = {ld['rho_Cd']:.6f}")
print("env: l_hat = {l_hat:.4f}, gamma_hat = {gamma_hat:.4f}".format(**rep["env"]))
print(io.dumps_json(rep["theorem_constants"]))
