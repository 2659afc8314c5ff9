"""
Test suite for nodal_atlas application.

Tests cover:
- Model: quadrant geometry, homeomorphisms, nonlinearities, weights, arcs
- Quadrature: periods, level crossings, gap transits, the worked examples
- Flow: switched integration, zero counting, winding, conservation
- Certify: twist and window conditions, itineraries, lower bounds
- Shoot: arc scanning, solution search and nodal classification
- Autonomous: constant weight branches
- Serialize: config round trips and result tables
- Command: task dispatch, output files and exit codes
- Models: ExperimentRun ledger rows
- Configuration: settings and numerical defaults

The multiplicity searches are slow and run only with NODAL_ATLAS_SLOW_TESTS set.
"""

import csv
import json
import math
import os
import random
import tempfile
import unittest
from datetime import timedelta
from pathlib import Path
from unittest.mock import patch

import yaml
from django.conf import settings
from django.core.management import call_command
from django.test import SimpleTestCase, TestCase, override_settings
from scipy import special

from . import autonomous, certify, conf, flow, quadrature, shoot
from .exceptions import (ConfigError, DomainViolation, InvalidWindow, MapUndefined,
                         MissingCertificate, NodalAtlasError, OutOfRange, SignViolation)
from .management.commands.nodal_atlas import (equal_hump_problem, example_equal_humps,
                                               example_saddle)
from .model import (BoundaryArc, HomeoSpec, H_by_quadrature, NonlinSpec, ProblemSpec,
                    StepWeight, eval_h, eval_potentials, h_star, predecessor,
                    quadrant_of_point, successor)
from .models import ExperimentRun
from .serialize import (COLUMNS, RunConfig, dump_config, load_config, parse_config,
                        problem_from_dict, problem_to_dict, write_table)

SLOW = bool(os.environ.get('NODAL_ATLAS_SLOW_TESTS'))

# Printed values in the worked examples are truncated to two decimals.
PRINTED_TOL = 1e-2


def identity_problem(lam, weight, p=3.0, **arcs):
    return ProblemSpec(h=HomeoSpec.build('identity'), g=NonlinSpec('power-p', p), lam=lam,
                       weight=weight, **arcs)


def saddle_problem(tau=1.0, varsigma=6.0):
    """lambda = -1, mu = 2, p = 3: x* = 1, so x = 1.5 and x = 14 give theta 1.5 and 14."""
    return identity_problem(-1.0, StepWeight.equal(2.0, tau, varsigma, 1))


SADDLE_C1 = 1.40625
SADDLE_C2 = 19110.0


class ModelTests(SimpleTestCase):
    """Test the problem description types."""

    def test_quadrant_order_is_clockwise(self):
        """Test that successors follow I, IV, III, II."""
        self.assertEqual(successor('I'), 'IV')
        self.assertEqual(successor('I', 2), 'III')
        self.assertEqual(predecessor('I'), 'II')
        self.assertEqual(successor('II'), 'I')

    def test_quadrant_of_point(self):
        """Test quadrant labels of points in each open quadrant."""
        self.assertEqual(quadrant_of_point(1.0, 1.0), 'I')
        self.assertEqual(quadrant_of_point(1.0, -1.0), 'IV')
        self.assertEqual(quadrant_of_point(-1.0, -1.0), 'III')
        self.assertEqual(quadrant_of_point(-1.0, 1.0), 'II')

    def test_eval_h(self):
        """Test h at reference points of three kinds."""
        self.assertEqual(eval_h(HomeoSpec.build('identity'), 0.0), 0.0)
        self.assertAlmostEqual(eval_h(HomeoSpec.build('minkowski-inverse'), 0.6), 0.75, places=12)
        self.assertAlmostEqual(eval_h(HomeoSpec.build('log-barrier', rho=4.0), 2.0), math.log(2.0), places=12)

    def test_eval_potentials(self):
        """Test the Hamiltonian at the first worked example's inner abscissa and at the origin."""
        problem = equal_hump_problem(1.0, 20.0, 5.9, 1.5)
        values = eval_potentials(problem, 0, math.sqrt(0.4), 0.0)
        self.assertAlmostEqual(values.hamiltonian, 1.0, places=12)
        self.assertAlmostEqual(values.energy, 0.2, places=12)
        self.assertEqual(eval_potentials(problem, 1, 0.0, 0.0).hamiltonian, 0.0)

    def test_h_star(self):
        """Test H* of the unbounded, singular and barrier kinds."""
        self.assertEqual(h_star(HomeoSpec.build('identity')), math.inf)
        self.assertAlmostEqual(h_star(HomeoSpec.build('minkowski-inverse')), 1.0)
        barrier = HomeoSpec.build('log-barrier', rho=4.0)
        self.assertAlmostEqual(h_star(barrier), 4.0)

    def test_closed_form_primitives_match_quadrature(self):
        """Test every built-in H against adaptive quadrature of h."""
        specs = [HomeoSpec.build('identity'), HomeoSpec.build('power-q', q=2.5),
                 HomeoSpec.build('minkowski-inverse'), HomeoSpec.build('relativistic-inverse'),
                 HomeoSpec.build('rational-cubic'), HomeoSpec.build('log-barrier', rho=4.0)]
        for spec in specs:
            for y in (-0.6, 0.3, 0.9):
                with self.subTest(kind=spec.kind, y=y):
                    self.assertAlmostEqual(float(spec.H(y)), H_by_quadrature(spec, y), places=9)

    def test_inverse_primitive_branches(self):
        """Test that H_+^-1 and H_-^-1 invert H on each side."""
        spec = HomeoSpec.build('relativistic-inverse')
        self.assertAlmostEqual(spec.h_inverse_of_H(float(spec.H(0.7)), 'plus'), 0.7, places=10)
        self.assertAlmostEqual(spec.h_inverse_of_H(float(spec.H(-0.7)), 'minus'), -0.7, places=10)

    def test_bounded_domain_edges(self):
        """Test H* for the singular and barrier homeomorphisms."""
        self.assertAlmostEqual(HomeoSpec.build('minkowski-inverse').h_star(), 1.0)
        self.assertAlmostEqual(HomeoSpec.build('log-barrier', rho=4.0).H_edge('plus'), 4.0)
        self.assertEqual(HomeoSpec.build('identity').h_star(), math.inf)

    def test_domain_guard(self):
        """Test that h refuses arguments outside (rho_minus, rho_plus)."""
        spec = HomeoSpec.build('minkowski-inverse')
        with self.assertRaises(DomainViolation):
            spec.h(1.0)

    def test_log_barrier_needs_finite_rho(self):
        """Test that log-barrier rejects an unbounded domain."""
        with self.assertRaises(DomainViolation):
            HomeoSpec(kind='log-barrier')

    def test_power_nonlinearity(self):
        """Test G, its inverse branches and the cancellation-free drop."""
        g = NonlinSpec('power-p', 3.0)
        self.assertAlmostEqual(float(g.G(2.0)), 4.0)
        self.assertAlmostEqual(g.G_inverse(4.0, 'plus'), 2.0, places=12)
        self.assertAlmostEqual(g.G_inverse(4.0, 'minus'), -2.0, places=12)
        self.assertAlmostEqual(g.drop(1.5, 0.1), float(g.G(1.5) - g.G(1.4)), places=12)
        self.assertAlmostEqual(g.drop(-1.5, 0.1), float(g.G(-1.5) - g.G(-1.4)), places=12)

    def test_exponential_nonlinearity(self):
        """Test G_inverse of exp-minus-one on both sides."""
        g = NonlinSpec('exp-minus-one')
        for side in ('plus', 'minus'):
            x = g.G_inverse(0.3, side)
            self.assertAlmostEqual(float(g.G(x)), 0.3, places=12)
            self.assertEqual(x > 0.0, side == 'plus')

    def test_linear_power_rejected(self):
        """Test that p = 1 is refused."""
        with self.assertRaises(NodalAtlasError):
            NonlinSpec('power-p', 1.0)

    def test_equal_weight_layout(self):
        """Test breakpoints, lengths and values of equal humps."""
        w = StepWeight.equal(20.0, 5.9, 1.5, 1)
        for value, expected in zip(w.breakpoints, (0.0, 5.9, 7.4, 13.3)):
            self.assertAlmostEqual(value, expected, places=12)
        self.assertEqual(w.m, 1)
        self.assertAlmostEqual(w.L, 13.3)
        self.assertAlmostEqual(w.varsigma(0), 1.5)
        self.assertEqual(w.weight_at(6.0), 0.0)
        self.assertEqual(w.weight_at(5.9), 20.0)
        self.assertEqual([kind for kind, *_ in w.intervals()], ['hump', 'gap', 'hump'])

    def test_weight_validation(self):
        """Test rejection of malformed weights."""
        with self.assertRaises(NodalAtlasError):
            StepWeight((0.5, 1.0), (1.0,))
        with self.assertRaises(NodalAtlasError):
            StepWeight((0.0, 1.0, 0.8, 2.0), (1.0, 1.0))
        with self.assertRaises(NodalAtlasError):
            StepWeight((0.0, 1.0), (0.0,))

    def test_boundary_arcs(self):
        """Test ray validation and transversal distances."""
        with self.assertRaises(NodalAtlasError):
            BoundaryArc(kind='ray')
        arc = BoundaryArc('positive-y-axis')
        self.assertAlmostEqual(arc.signed_distance(0.3, 2.0), 0.3)
        x, y = BoundaryArc('ray', angle=0.5 * math.pi).point_at_radius(2.0)
        self.assertAlmostEqual(x, 2.0)
        self.assertAlmostEqual(y, 0.0)

    def test_hump_potential(self):
        """Test F_i at the first worked example's inner abscissa."""
        problem = equal_hump_problem(1.0, 20.0, 5.9, 1.5)
        self.assertAlmostEqual(float(problem.F(0, math.sqrt(0.4))), 1.0, places=12)
        self.assertTrue(problem.is_odd())


class QuadratureTests(SimpleTestCase):
    """Test periods and transit times against closed forms and the worked examples."""

    def test_equal_humps_choice_one(self):
        """Test the first equal-hump example (mu=20, c1=1, c2=5)."""
        row = example_equal_humps(1, 20.0, 1.0, 5.0, 5.9, 1.5)
        self.assertAlmostEqual(row['x_com'], 0.94, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['transit'], 1.46, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['x_plus_sq_c1'], 0.4, delta=1e-10)
        self.assertAlmostEqual(row['x_plus_sq_c2'], (math.sqrt(401.0) - 1.0) / 20.0, delta=1e-10)
        self.assertAlmostEqual(row['T_c1'], 2.41, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['T_c2'], 1.63, delta=PRINTED_TOL)

    def test_equal_humps_choice_two(self):
        """Test the second equal-hump example (mu=130, c1=0.8, c2=20)."""
        row = example_equal_humps(2, 130.0, 0.8, 20.0, 1.9, 1.55)
        self.assertAlmostEqual(row['x_com'], 0.87, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['transit'], 1.53, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['x_plus_sq_c1'], 0.15, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['x_plus_sq_c2'], 0.77, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['T_c1'], 1.62, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['T_c2'], 0.73, delta=PRINTED_TOL)

    def test_equal_humps_period_ordering(self):
        """Test which period orderings hold for the two equal-hump choices."""
        one = example_equal_humps(1, 20.0, 1.0, 5.0, 5.9, 1.5)
        two = example_equal_humps(2, 130.0, 0.8, 20.0, 1.9, 1.55)
        self.assertTrue(one['T_c1'] > one['T_c2'])
        self.assertFalse(one['T_c1'] > 2.0 * one['T_c2'])
        self.assertTrue(two['T_c1'] > 2.0 * two['T_c2'])

    def test_transit_closed_form(self):
        """Test the level-line transit against 2*asin(x_com/sqrt(2c))."""
        row = example_equal_humps(1, 20.0, 1.0, 5.0, 5.9, 1.5)
        self.assertAlmostEqual(row['x_com'], 0.8 ** 0.25, places=12)
        self.assertAlmostEqual(row['transit'], 2.0 * math.asin(row['x_com'] / math.sqrt(2.0)), places=8)

    def test_saddle_example(self):
        """Test the normalized quarter periods and gap thresholds for theta 1.5 and 14."""
        row = example_saddle(1.5, 14.0)
        self.assertAlmostEqual(row['T1_theta1'], 1.07, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['T1_theta2'], 0.09, delta=PRINTED_TOL)
        self.assertAlmostEqual(row['Lambda1'], 2.82, delta=5e-3)
        self.assertAlmostEqual(row['Lambda2'], 2.92, delta=5e-3)
        self.assertAlmostEqual(row['two_Lambda_star'], 5.85, delta=5e-3)

    def test_lambda_zero_quarters(self):
        """Test that every quarter equals the closed form at lambda = 0."""
        problem = identity_problem(0.0, StepWeight.constant(1.0, 1.0))
        q = quadrature.quarter_times(problem, 0, 1.0)
        expected = quadrature.period_scaling_lambda0(3.0, 1.0, 1.0)
        for quadrant in ('I', 'II', 'III', 'IV'):
            self.assertAlmostEqual(q.of(quadrant), expected, places=8)

    def test_semilinear_period_agrees(self):
        """Test the single-integral period form against the quarter sum."""
        problem = identity_problem(1.0, StepWeight.constant(20.0, 1.0))
        x_plus = math.sqrt(0.4)
        self.assertAlmostEqual(quadrature.semilinear_period(1.0, 20.0, 3.0, x_plus),
                               quadrature.period(problem, 0, 1.0), places=8)

    def test_period_matches_first_return(self):
        """Test quadrature periods against the ODE first-return time."""
        cases = [
            (0.0, 3.0, 1.0, 1.0),
            (1.0, 3.0, 20.0, 1.0),
            (-1.0, 3.0, 2.0, SADDLE_C1),
            (0.5, 0.5, 1.0, 0.5),
        ]
        for lam, p, mu, c in cases:
            with self.subTest(lam=lam, p=p):
                problem = identity_problem(lam, StepWeight.constant(mu, 1.0), p=p)
                self.assertAlmostEqual(quadrature.period(problem, 0, c),
                                       flow.first_return_time(problem, 0, c), delta=1e-5)

    def test_harmonic_gap_period(self):
        """Test that the gap orbit of identity h with lambda = 1 has period 2*pi."""
        problem = identity_problem(1.0, StepWeight.constant(1.0, 1.0))
        self.assertAlmostEqual(quadrature.gap_period(problem, 0.5), 2.0 * math.pi, places=8)

    def test_lambda_zero_transit_is_linear(self):
        """Test that the lambda = 0 transit is distance over speed."""
        problem = identity_problem(0.0, StepWeight.constant(1.0, 1.0))
        self.assertAlmostEqual(quadrature.energy_transit(problem, 2.0, -1.0, 1.0, 'upper'), 1.0)

    def test_level_above_h_star(self):
        """Test that c >= H* is refused for the singular homeomorphism."""
        problem = ProblemSpec(h=HomeoSpec.build('minkowski-inverse'), g=NonlinSpec('power-p', 3.0),
                              lam=0.0, weight=StepWeight.constant(1.0, 1.0))
        with self.assertRaises(DomainViolation):
            quadrature.level_crossing(problem, 0, 1.5)

    def test_nonpositive_level(self):
        """Test that c <= 0 is refused."""
        problem = identity_problem(0.0, StepWeight.constant(1.0, 1.0))
        with self.assertRaises(DomainViolation):
            quadrature.solve_level_abscissa(problem, 0, 0.0, 'plus')

    def test_script_t1_range(self):
        """Test the theta range check of the normalized quarter period."""
        with self.assertRaises(OutOfRange):
            quadrature.script_T1(0.9, 3.0)

    def test_lambda_bounds_needs_negative_lambda(self):
        """Test the sign check of the gap thresholds."""
        with self.assertRaises(SignViolation):
            quadrature.lambda_bounds(1.5, 14.0, 3.0, 0.0)

    def test_compat_needs_positive_lambda(self):
        """Test that compatibility is only defined for lambda > 0."""
        problem = identity_problem(0.0, StepWeight.equal(1.0, 1.0, 1.0, 1))
        with self.assertRaises(SignViolation):
            quadrature.compat_margin(problem, 0, ((1.0, 2.0), (1.0, 2.0)))


class FlowTests(SimpleTestCase):
    """Test the switched integrator and its diagnostics."""

    def setUp(self):
        self.harmonic = identity_problem(1.0, StepWeight.constant(1.0, 10.0))

    def test_harmonic_end_point(self):
        """Test that (0, 1) reaches (1, 0) after a quarter turn."""
        traj = flow.integrate(self.harmonic, (0.0, 1.0), 0.0, 0.5 * math.pi, mu=0.0)
        self.assertAlmostEqual(traj.end.x, 1.0, places=8)
        self.assertAlmostEqual(traj.end.y, 0.0, places=8)

    def test_winding_is_clockwise(self):
        """Test that half a turn of the harmonic flow winds by pi."""
        traj = flow.integrate(self.harmonic, (0.0, 1.0), 0.0, math.pi, mu=0.0)
        self.assertAlmostEqual(flow.winding(traj), math.pi, places=6)

    def test_zero_counts(self):
        """Test x and y zero counts of sin and cos."""
        traj = flow.integrate(self.harmonic, (0.0, 1.0), 0.0, 2.0 * math.pi - 0.3, mu=0.0)
        self.assertEqual(flow.count_zeros(traj, 'x', 'open', (0.5, 5.9)), 1)
        self.assertEqual(flow.count_zeros(traj, 'y', 'open', (0.5, 5.9)), 2)

    def test_unknown_window_kind(self):
        """Test rejection of an unknown window."""
        traj = flow.integrate(self.harmonic, (0.0, 1.0), 0.0, 1.0, mu=0.0)
        with self.assertRaises(ValueError):
            flow.count_zeros(traj, 'x', 'half-open')

    def test_invalid_window(self):
        """Test that t0 >= t1 is refused."""
        with self.assertRaises(InvalidWindow):
            flow.integrate(self.harmonic, (0.0, 1.0), 2.0, 1.0)

    def test_gap_map_index(self):
        """Test that psi needs an existing gap."""
        with self.assertRaises(InvalidWindow):
            flow.poincare_psi(self.harmonic, 0, (0.0, 1.0))

    def test_conservation_on_switched_problem(self):
        """Test per-interval conservation and reversibility."""
        problem = equal_hump_problem(1.0, 20.0, 5.9, 1.5)
        traj = flow.integrate(problem, (0.0, 1.2), 0.0, problem.weight.L)
        self.assertLessEqual(flow.hamiltonian_drift(problem, traj), 1e-7)
        self.assertLessEqual(flow.reversibility_error(problem, (0.0, 1.2), 0.0, 5.9), 1e-8)

    def test_maps_compose(self):
        """Test that phi, psi, phi agree with the full map."""
        problem = equal_hump_problem(1.0, 20.0, 5.9, 1.5)
        z = flow.poincare_phi(problem, 0, (0.0, 1.2))
        z = flow.poincare_psi(problem, 0, z)
        z = flow.poincare_phi(problem, 1, z)
        full = flow.poincare_full(problem, (0.0, 1.2))
        self.assertAlmostEqual(z.x, full.x, places=7)
        self.assertAlmostEqual(z.y, full.y, places=7)

    def test_blow_up_ends_trajectory(self):
        """Test that the singular homeomorphism blows up and the map is undefined."""
        problem = ProblemSpec(h=HomeoSpec.build('minkowski-inverse'), g=NonlinSpec('power-p', 3.0),
                              lam=0.0, weight=StepWeight.constant(1.0, 1.0))
        traj = flow.integrate(problem, (-3.0, 0.5), 0.0, 1.0)
        self.assertIsNotNone(traj.blow_up)
        with self.assertRaises(MapUndefined):
            flow.poincare_full(problem, (-3.0, 0.5))


class CertifyTests(SimpleTestCase):
    """Test hypothesis checks and the multiplicity count."""

    def certificate(self, i, alpha, beta, status='satisfied'):
        return certify.TwistCertificate(i=i, alpha=alpha, beta=beta, variant='standard', d=1.0,
                                        e=2.0, status=status, margins=(), error=0.0)

    def test_twist_choice_two(self):
        """Test that (alpha, beta) = (1, 2) holds on the second equal-hump choice."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        for i in (0, 1):
            annulus = certify.Annulus.build(problem, i, 0.8, 20.0)
            cert = certify.check_twist(problem, annulus, None, 1, 2)
            self.assertEqual(cert.status, 'satisfied')
            self.assertEqual(cert.crossing_number, 1)
            self.assertEqual(cert.d, 0.8)

    def test_twist_choice_one(self):
        """Test that the first choice needs alpha = 2 and beta = 3 at tau = 5.9."""
        problem = equal_hump_problem(1.0, 20.0, 5.9, 1.5)
        annulus = certify.Annulus.build(problem, 0, 1.0, 5.0)
        self.assertTrue(certify.check_twist(problem, annulus, None, 2, 3).satisfied)
        cert = certify.check_twist(problem, annulus, None, 0, 1)
        self.assertEqual(cert.status, 'violated')
        self.assertTrue(cert.violated.startswith('slow side'))
        self.assertGreater(cert.deficit, 0.0)

    def test_twist_checks_every_quadrant(self):
        """Test that a left half-orbit too short for tau violates the twist on asymmetric g."""
        problem = ProblemSpec(h=HomeoSpec.build('identity'), g=NonlinSpec('exp-minus-one'), lam=0.0,
                              weight=StepWeight.constant(1.0, 250.0))
        annulus = certify.Annulus.build(problem, 0, 0.5, 5000.0)
        cert = certify.check_twist(problem, annulus, None, 1, 2)
        margins = dict(cert.margins)
        self.assertEqual(len(margins), 8)
        self.assertGreater(margins['slow side, kappa=I'], 0.0)
        self.assertGreater(margins['slow side, kappa=IV'], 0.0)
        self.assertLess(margins['slow side, kappa=II'], 0.0)
        self.assertEqual(cert.status, 'violated')
        self.assertEqual(cert.violated, 'slow side, kappa=II')

    def test_twist_scan(self):
        """Test that a tau scan reports a violation outside the window."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        annulus = certify.Annulus.build(problem, 0, 0.8, 20.0)
        statuses = dict(certify.scan_twist(problem, annulus, [1.9, 3.0], 1, 2))
        self.assertEqual(statuses[1.9], 'satisfied')
        self.assertEqual(statuses[3.0], 'violated')

    def test_twist_arguments(self):
        """Test rejection of unordered winding counts and unknown variants."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        annulus = certify.Annulus.build(problem, 0, 0.8, 20.0)
        with self.assertRaises(ValueError):
            certify.check_twist(problem, annulus, None, 2, 2)
        with self.assertRaises(ValueError):
            certify.check_twist(problem, annulus, None, 0, 1, variant='sideways')

    def test_start_in_fourth_quadrant(self):
        """Test the twist margins for an arc starting in quadrant IV."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        annulus = certify.Annulus.build(problem, 0, 0.8, 20.0)
        cert = certify.check_twist(problem, annulus, None, 1, 2, variant='start-iv')
        qd = quadrature.quarter_times(problem, 0, cert.d)
        qe = quadrature.quarter_times(problem, 0, cert.e)
        margins = dict(cert.margins)
        self.assertAlmostEqual(margins['slow side'], qd.t_IV + qd.t_III + qd.period - 1.9, places=10)
        self.assertAlmostEqual(margins['fast side'], 1.9 - 2.0 * qe.period, places=10)
        self.assertFalse(cert.extrapolated)

    def test_lambda_zero_gap_bound(self):
        """Test the lambda = 0 gap bound from the outer x-intercepts and the inner speed."""
        problem = equal_hump_problem(0.0, 1.0, 1.0, 1.0)
        a0 = certify.Annulus.build(problem, 0, 0.5, 2.0)
        a1 = certify.Annulus.build(problem, 1, 0.5, 2.0)
        self.assertAlmostEqual(certify.lambda0_gap_bound(problem, a0, a1), 2.0 * 8.0 ** 0.25, places=10)

    def test_annulus_order(self):
        """Test that an annulus needs 0 < c1 <= c2."""
        with self.assertRaises(NodalAtlasError):
            certify.Annulus(0, 5.0, 1.0)

    def test_compatibility(self):
        """Test the compatibility abscissa of the second choice."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        a0 = certify.Annulus.build(problem, 0, 0.8, 20.0)
        a1 = certify.Annulus.build(problem, 1, 0.8, 20.0)
        report = certify.check_compat(problem, a0, a1)
        self.assertTrue(report.ok)
        self.assertAlmostEqual(report.x_com, (4.0 * 19.2 / 130.0) ** 0.25, places=12)

    def test_compatibility_degenerate_annulus(self):
        """Test that a single-orbit annulus gives x_com = 0 and passes."""
        problem = equal_hump_problem(1.0, 20.0, 5.9, 1.5)
        a0 = certify.Annulus.build(problem, 0, 1.0, 1.0)
        a1 = certify.Annulus.build(problem, 1, 1.0, 1.0)
        report = certify.check_compat(problem, a0, a1)
        self.assertEqual(report.x_com, 0.0)
        self.assertTrue(report.ok)
        self.assertAlmostEqual(report.slack, math.sqrt(2.0), places=12)

    def test_equal_hump_window(self):
        """Test that gap length 1.55 lies in the window and 1.5 does not."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        annuli = (certify.Annulus.build(problem, 0, 0.8, 20.0),
                  certify.Annulus.build(problem, 1, 0.8, 20.0))
        report = certify.check_linear_window(problem, 0, 'equal-hump-positive', annuli)
        self.assertEqual(report.status, 'satisfied')
        self.assertEqual(report.multiplier, 1)
        short = certify.check_linear_window(problem, 0, 'equal-hump-positive', annuli, varsigma=1.5)
        self.assertEqual(short.status, 'violated')

    def test_saddle_window(self):
        """Test the lambda < 0 gap threshold 2*Lambda* = 5.85."""
        problem = saddle_problem()
        annuli = (certify.Annulus.build(problem, 0, SADDLE_C1, SADDLE_C2),
                  certify.Annulus.build(problem, 1, SADDLE_C1, SADDLE_C2))
        params = {'theta1': 1.5, 'theta2': 14.0}
        self.assertTrue(certify.check_linear_window(problem, 0, 'saddle-gap', annuli, **params).satisfied)
        report = certify.check_linear_window(problem, 0, 'saddle-gap', annuli, varsigma=5.0, **params)
        self.assertEqual(report.status, 'violated')

    def test_window_sign_checks(self):
        """Test that each window variant refuses the wrong sign of lambda."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        annuli = (certify.Annulus(0, 0.8, 20.0), certify.Annulus(1, 0.8, 20.0))
        with self.assertRaises(SignViolation):
            certify.check_linear_window(problem, 0, 'through-y-axis', annuli)
        with self.assertRaises(SignViolation):
            certify.check_linear_window(problem, 0, 'lambda0-gap', annuli)

    def test_itinerary_counts(self):
        """Test 2^m itineraries for lambda >= 0 and 4^m for lambda < 0."""
        self.assertEqual(len(certify.enumerate_itineraries(1, 0.0)), 2)
        self.assertEqual(len(certify.enumerate_itineraries(1, -1.0)), 4)
        self.assertEqual(len(certify.enumerate_itineraries(2, -1.0)), 16)
        self.assertEqual(len(certify.enumerate_itineraries(0, 1.0)), 1)

    def test_itinerary_moves(self):
        """Test labels and exit quadrants of the single-gap itineraries."""
        by_label = {it.label(): it for it in certify.enumerate_itineraries(1, 0.0)}
        self.assertEqual(set(by_label), {'I-one->I', 'I-one->III'})
        self.assertEqual(by_label['I-one->I'].exit_quadrant(0), 'II')
        self.assertEqual(by_label['I-one->III'].exit_quadrant(0), 'IV')

    def test_lower_bounds(self):
        """Test the counts 2, 16 and the four-class multiplier."""
        one = [self.certificate(0, 0, 1), self.certificate(1, 0, 1)]
        two = [self.certificate(0, 0, 2), self.certificate(1, 0, 2)]
        self.assertEqual(certify.lower_bound(one, 0.0).total, 2)
        self.assertEqual(certify.lower_bound(one, 0.0, 'four-class').total, 8)
        self.assertEqual(certify.four_class_bound(one, 0.0), 8)
        self.assertEqual(certify.lower_bound(two, -1.0).total, 16)

    def test_lower_bound_needs_certificates(self):
        """Test that an indeterminate certificate blocks the count."""
        certs = [self.certificate(0, 0, 1), self.certificate(1, 0, 1, status='indeterminate')]
        with self.assertRaises(MissingCertificate):
            certify.lower_bound(certs, 0.0)
        with self.assertRaises(MissingCertificate):
            certify.lower_bound([self.certificate(0, 0, 1), None], 0.0)

    def test_equal_hump_threshold(self):
        """Test (2(2*beta+1))^(2(p+1)/(p-1)) for beta = 1, p = 3."""
        self.assertAlmostEqual(certify.equal_hump_threshold(1, 3.0), 1296.0, places=8)

    def test_lambda_ratio(self):
        """Test the gap-to-hump ratio against the Beta function."""
        expected = 8.0 / special.beta(0.25, 0.5)
        self.assertAlmostEqual(certify.lambda_ratio(3.0, 1.0), expected, places=12)

    def test_certificate_summary(self):
        """Test that summaries are plain dicts with named margins."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        annulus = certify.Annulus.build(problem, 0, 0.8, 20.0)
        summary = certify.certificate_summary(certify.check_twist(problem, annulus, None, 1, 2))
        self.assertEqual(summary['status'], 'satisfied')
        self.assertIn('fast side, kappa=I', summary['margins'])


class ShootTests(SimpleTestCase):
    """Test arc scans, solution search and classification on a single hump."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.problem = autonomous.branch_problem(0.0, 1.0, 3.0, 1.0, n=1)
        cls.solutions = shoot.find_solutions(cls.problem, max_winding=math.pi, n_samples=64,
                                             c_range=(1.0, 200.0), stable_rounds=1, max_doublings=1)

    def test_arc_points(self):
        """Test radius and energy parametrizations of the positive y-axis."""
        arc = BoundaryArc('positive-y-axis')
        self.assertEqual(shoot.arc_point(self.problem, arc, 2.0, False), (0.0, 2.0))
        x, y = shoot.arc_point(self.problem, arc, 2.0, True)
        self.assertEqual(x, 0.0)
        self.assertAlmostEqual(y, 2.0, places=12)

    def test_radial_arc_needs_range(self):
        """Test that a radial arc without span needs an energy range."""
        with self.assertRaises(NodalAtlasError):
            shoot.scan_arc(self.problem, n_samples=4)

    def test_scan_is_ordered(self):
        """Test that samples come back in parameter order with increasing winding."""
        samples = shoot.scan_arc(self.problem, n_samples=8, c_range=(1.0, 200.0))
        self.assertEqual([s.param for s in samples], sorted(s.param for s in samples))
        self.assertTrue(all(s.ok for s in samples))
        self.assertLess(samples[0].theta, samples[-1].theta)

    def test_single_positive_solution(self):
        """Test that the only half-turn solution is the positive branch solution."""
        self.assertEqual(len(self.solutions), 1)
        solution = self.solutions[0]
        self.assertTrue(solution.is_positive)
        self.assertLessEqual(solution.residual, 1e-8 * solution.scale)
        self.assertTrue(solution.signature.consistent)
        point = autonomous.branch_point(1, 0.0, 1.0, 3.0, 1.0)
        slope = autonomous.branch_initial_slope(point, 1.0, 3.0)
        self.assertAlmostEqual(solution.z0.y, slope, delta=1e-6 * slope)
        self.assertGreater(solution.M_plus, 0.99 * point.M_plus)

    def test_high_residual_candidate_discarded(self):
        """Test that a refined root whose end point misses r_L by more than 1e-8 x scale is dropped."""
        real = shoot.build_solution

        def off_target(*args, **kwargs):
            solution = real(*args, **kwargs)
            solution.residual = 1e-6 * solution.scale
            return solution

        with patch.object(shoot, 'build_solution', side_effect=off_target):
            with self.assertLogs('nodal_atlas.shoot', level='WARNING') as logs:
                found = shoot.find_solutions(self.problem, max_winding=math.pi, n_samples=64,
                                             c_range=(1.0, 200.0), stable_rounds=1, max_doublings=0)
        self.assertEqual(found, [])
        self.assertTrue(any('discarded' in line for line in logs.output))

    def test_verify_and_mirror(self):
        """Test re-integration and the mirrored solution."""
        solution = self.solutions[0]
        residual, same = shoot.verify_solution(self.problem, solution)
        self.assertTrue(same)
        self.assertLessEqual(residual, 1e-7 * solution.scale)
        mirrored = shoot.mirror_solution(self.problem, solution)
        self.assertEqual(mirrored.zeros_x, solution.zeros_x)
        self.assertAlmostEqual(mirrored.z0.y, -solution.z0.y)

    def test_solution_row(self):
        """Test that CSV rows carry exactly the solve columns."""
        row = shoot.solution_row(0, self.solutions[0])
        self.assertEqual(tuple(row), COLUMNS['solve'])
        self.assertEqual(row['itinerary'], 'I')

    def test_empty_result(self):
        """Test that an energy range with no crossing yields no solutions."""
        found = shoot.find_solutions(self.problem, max_winding=math.pi, n_samples=8,
                                     c_range=(1.0, 2.0), stable_rounds=1, max_doublings=0)
        self.assertEqual(found, [])


class AutonomousTests(SimpleTestCase):
    """Test constant weight branches."""

    def test_dirichlet_eigenvalue(self):
        """Test sigma_n = (n*pi/L)^2."""
        self.assertAlmostEqual(autonomous.sigma_n(2, 1.0), 4.0 * math.pi ** 2)

    def test_critical_points(self):
        """Test x*, omega_+ and c* for lambda = -1, mu = 2, p = 3."""
        cp = autonomous.critical_points(-1.0, 2.0, 3.0)
        self.assertAlmostEqual(cp.x_star, 1.0)
        self.assertAlmostEqual(cp.omega_plus, math.sqrt(0.5))
        self.assertAlmostEqual(cp.c_star, -0.125)
        self.assertAlmostEqual(autonomous.apriori_curve(-1.0, 2.0, 3.0), math.sqrt(0.5))

    def test_no_branch_beyond_eigenvalue(self):
        """Test that no branch point exists for lambda >= sigma_n."""
        self.assertIsNone(autonomous.branch_point(1, 10.0, 1.0, 3.0, 1.0))

    def test_branch_point_period(self):
        """Test that the branch orbit has period 2L/n."""
        point = autonomous.branch_point(2, 0.0, 1.0, 3.0, 1.0)
        self.assertAlmostEqual(autonomous.period_map(0.0, 1.0, 3.0, point.x_plus), 1.0, places=8)

    def test_amplitude_above_x_star(self):
        """Test M_+ > x* for p > 1 and lambda < 0."""
        point = autonomous.branch_point(1, -5.0, 1.0, 3.0, 1.0)
        self.assertGreater(point.M_plus, autonomous.critical_points(-5.0, 1.0, 3.0).x_star)

    def test_superlinear_sweep_decreases(self):
        """Test that M_+ decreases along the superlinear branch."""
        sweep = autonomous.branch_sweep(1, [-2.0, 0.0, 2.0, 5.0, 9.0, 12.0], 1.0, 3.0, 1.0)
        self.assertEqual(sweep.expected, 'decreasing')
        self.assertEqual(sweep.verdict, 'decreasing')
        self.assertEqual(len(sweep.points), 5)

    def test_unsorted_grid(self):
        """Test that the sweep grid must ascend."""
        with self.assertRaises(ValueError):
            autonomous.branch_sweep(1, [1.0, 0.0], 1.0, 3.0, 1.0)

    def test_nodes_and_problem(self):
        """Test node positions and the end arc of even branches."""
        point = autonomous.BranchPoint(lam=0.0, n=3, M_plus=1.0, x_plus=1.0)
        self.assertEqual(autonomous.nodes(point, 3.0), [1.0, 2.0])
        self.assertEqual(autonomous.branch_problem(0.0, 1.0, 3.0, 1.0, n=2).rL.kind, 'positive-y-axis')
        self.assertAlmostEqual(autonomous.branch_initial_slope(point, 4.0, 3.0), math.sqrt(2.0))


class SerializeTests(SimpleTestCase):
    """Test config parsing and result tables."""

    def setUp(self):
        self.temp_dir = tempfile.mkdtemp()

    def test_problem_round_trip(self):
        """Test that problem_to_dict and problem_from_dict are inverse."""
        problem = ProblemSpec(h=HomeoSpec.build('power-q', q=2.0), g=NonlinSpec('power-p', 0.5),
                              lam=-1.0, weight=StepWeight.equal(2.0, 1.0, 6.0, 1),
                              rL=BoundaryArc('ray', angle=2.0, span=(0.1, 3.0)))
        self.assertEqual(problem_from_dict(problem_to_dict(problem)), problem)

    def test_yaml_round_trip(self):
        """Test dump_config followed by load_config."""
        config = RunConfig(task='periods', params=parse_config({'task': {'name': 'periods'}}).params,
                           problem=equal_hump_problem(1.0, 20.0, 5.9, 1.5), tol_quad=1e-9)
        path = Path(self.temp_dir) / 'config.yaml'
        dump_config(config, path)
        self.assertEqual(load_config(path), config)

    def test_unknown_task(self):
        """Test the key path of an unknown task."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config({'task': {'name': 'optimize'}})
        self.assertEqual(ctx.exception.key_path, 'task.name')

    def test_missing_problem_keys(self):
        """Test key paths of missing problem fields."""
        with self.assertRaises(ConfigError) as ctx:
            problem_from_dict({'weight': {'breakpoints': [0, 1], 'heights': [1]}})
        self.assertEqual(ctx.exception.key_path, 'problem.lambda')
        with self.assertRaises(ConfigError) as ctx:
            problem_from_dict({'lambda': 0, 'weight': {'heights': [1]}})
        self.assertEqual(ctx.exception.key_path, 'problem.weight.breakpoints')

    def test_bad_tolerance(self):
        """Test that tolerances must be positive."""
        with self.assertRaises(ConfigError) as ctx:
            parse_config({'task': {'name': 'itineraries'}, 'tolerances': {'quad': -1}})
        self.assertEqual(ctx.exception.key_path, 'tolerances.quad')

    def test_table_precision(self):
        """Test 17 significant digits in CSV and the JSON mirror."""
        write_table(self.temp_dir, 'periods', COLUMNS['periods'], [{'c': 0.1, 'T': 2.0}])
        with open(Path(self.temp_dir) / 'periods.csv', newline='') as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], list(COLUMNS['periods']))
        self.assertEqual(rows[1][0], '0.10000000000000001')
        with open(Path(self.temp_dir) / 'periods.json') as f:
            data = json.load(f)
        self.assertEqual(data[0]['c'], 0.1)
        self.assertIsNone(data[0]['T_I'])


class CommandTests(TestCase):
    """Test the nodal_atlas management command."""

    def setUp(self):
        self.temp_dir = Path(tempfile.mkdtemp())

    def write_config(self, data):
        path = self.temp_dir / 'config.yaml'
        path.write_text(yaml.safe_dump(data), encoding='utf-8')
        return str(path)

    def run_task(self, data, **options):
        out = self.temp_dir / 'out'
        call_command('nodal_atlas', config=self.write_config(data), out=str(out), **options)
        return out

    def equal_hump_config(self, task, params, mu=130.0, tau=1.9, varsigma=1.55):
        weight = StepWeight.equal(mu, tau, varsigma, 1)
        return {
            'problem': {'lambda': 1.0, 'h': {'kind': 'identity'}, 'g': {'kind': 'power-p', 'p': 3.0},
                        'weight': {'breakpoints': list(weight.breakpoints), 'heights': list(weight.heights)}},
            'task': {'name': task, 'params': params},
        }

    def test_itineraries_task(self):
        """Test that the itinerary list and summary are written."""
        out = self.run_task({'task': {'name': 'itineraries', 'params': {'m': 1, 'lambda_sign': -1}}})
        with open(out / 'itineraries.json') as f:
            self.assertEqual(len(json.load(f)), 4)
        with open(out / 'summary.json') as f:
            summary = json.load(f)
        self.assertEqual(summary['count'], 4)
        self.assertEqual(summary['status'], 'ok')

    def test_periods_task(self):
        """Test the periods table for a level range."""
        config = self.equal_hump_config('periods', {'hump': 0, 'level_range': {'start': 1, 'stop': 5, 'num': 3}})
        out = self.run_task(config)
        with open(out / 'periods.csv', newline='') as f:
            rows = list(csv.DictReader(f))
        self.assertEqual(len(rows), 3)
        self.assertEqual(float(rows[0]['c']), 1.0)
        self.assertTrue(os.path.exists(out / 'periods.json'))

    def test_reproduce_saddle_example(self):
        """Test the saddle example table."""
        out = self.run_task({'task': {'name': 'reproduce-example', 'params': {'name': 'saddle'}}})
        with open(out / 'example_saddle.json') as f:
            row = json.load(f)[0]
        self.assertAlmostEqual(row['two_Lambda_star'], 5.85, delta=5e-3)
        self.assertIn('error_est', row)
        self.assertGreaterEqual(row['error_est'], 0.0)
        self.assertLess(row['error_est'], 1e-6)

    def test_reproduce_example_numbered_alias(self):
        """Test that name 4.1 selects the equal-hump example and writes error estimates."""
        out = self.run_task({'task': {'name': 'reproduce-example', 'params': {'name': '4.1'}}})
        with open(out / 'example_equal_humps.json') as f:
            rows = json.load(f)
        self.assertEqual([row['choice'] for row in rows], [1, 2])
        self.assertAlmostEqual(rows[0]['x_com'], 0.94, delta=PRINTED_TOL)
        self.assertTrue(all(row['error_est'] >= 0.0 for row in rows))
        with open(out / 'summary.json') as f:
            self.assertEqual(json.load(f)['example'], 'equal-humps')

    def test_empty_sweep_writes_header(self):
        """Test that an empty lambda grid gives a header-only table."""
        params = {'n': 1, 'lambda_grid': [], 'mu': 1.0, 'p': 3.0, 'L': 1.0}
        out = self.run_task({'task': {'name': 'sweep', 'params': params}})
        lines = (out / 'sweep.csv').read_text().splitlines()
        self.assertEqual(lines, [','.join(COLUMNS['sweep'])])

    def test_violated_certificate_exit_code(self):
        """Test exit status 4 when an expected twist condition fails."""
        params = {'humps': [{'i': 0, 'c1': 0.8, 'c2': 20.0, 'alpha': 0, 'beta': 1}]}
        with self.assertRaises(SystemExit) as ctx:
            self.run_task(self.equal_hump_config('twist', params))
        self.assertEqual(ctx.exception.code, 4)

    def test_satisfied_twist_task(self):
        """Test that certified humps finish with status ok."""
        humps = [{'i': i, 'c1': 0.8, 'c2': 20.0, 'alpha': 1, 'beta': 2} for i in (0, 1)]
        out = self.run_task(self.equal_hump_config('twist', {'humps': humps}))
        with open(out / 'summary.json') as f:
            self.assertEqual(json.load(f)['certificates'], {'0': 'satisfied', '1': 'satisfied'})

    def test_config_error_exit_code(self):
        """Test exit status 2 for a missing config file."""
        with self.assertRaises(SystemExit) as ctx:
            call_command('nodal_atlas', config=str(self.temp_dir / 'missing.yaml'))
        self.assertEqual(ctx.exception.code, 2)

    def test_negative_tolerance_flag(self):
        """Test exit status 2 for a non-positive --tol-quad."""
        with self.assertRaises(SystemExit) as ctx:
            self.run_task({'task': {'name': 'itineraries', 'params': {'m': 1}}}, tol_quad=-1.0)
        self.assertEqual(ctx.exception.code, 2)

    def test_numerical_failure_exit_code(self):
        """Test exit status 3 for an annulus with c1 > c2."""
        params = {'humps': [{'i': 0, 'c1': 20.0, 'c2': 0.8, 'alpha': 1, 'beta': 2}]}
        with self.assertRaises(SystemExit) as ctx:
            self.run_task(self.equal_hump_config('twist', params))
        self.assertEqual(ctx.exception.code, 3)

    def test_record_completed_run(self):
        """Test that --record stores a completed ledger row."""
        self.run_task({'task': {'name': 'itineraries', 'params': {'m': 2}}}, record=True)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.task, 'itineraries')
        self.assertTrue(run.succeeded)
        self.assertEqual(run.summary['count'], 4)
        self.assertIsNotNone(run.finished)

    def test_record_failed_run(self):
        """Test that a violated certificate is recorded as failed."""
        params = {'humps': [{'i': 0, 'c1': 0.8, 'c2': 20.0, 'alpha': 0, 'beta': 1}]}
        with self.assertRaises(SystemExit):
            self.run_task(self.equal_hump_config('twist', params), record=True)
        run = ExperimentRun.objects.get()
        self.assertEqual(run.status, 'failed')
        self.assertEqual(run.exit_code, 4)
        self.assertFalse(run.succeeded)

    @patch('nodal_atlas.management.commands.nodal_atlas.shoot.find_solutions', return_value=[])
    def test_solve_task_passes_options(self, mock_find):
        """Test that solve forwards scan options and writes an empty table."""
        config = self.equal_hump_config('solve', {'c_range': [0.8, 20.0], 'n_samples': 16})
        out = self.run_task(config, threads=2, seed=7)
        kwargs = mock_find.call_args.kwargs
        self.assertEqual(kwargs['c_range'], (0.8, 20.0))
        self.assertEqual(kwargs['threads'], 2)
        self.assertEqual(kwargs['seed'], 7)
        self.assertEqual((out / 'solve.csv').read_text().splitlines(), [','.join(COLUMNS['solve'])])


class ExperimentRunModelTests(TestCase):
    """Test ExperimentRun model operations."""

    def test_run_creation(self):
        """Test defaults of a new run."""
        run = ExperimentRun.objects.create(task='sweep')
        self.assertEqual(run.status, 'running')
        self.assertIsNone(run.duration_seconds)
        self.assertEqual(str(run), 'sweep (running)')

    def test_duration(self):
        """Test wall time of a finished run."""
        run = ExperimentRun.objects.create(task='sweep')
        run.finished = run.started + timedelta(seconds=3)
        run.status, run.exit_code = 'completed', 0
        run.save()
        self.assertAlmostEqual(run.duration_seconds, 3.0)
        self.assertTrue(run.succeeded)

    def test_ordering(self):
        """Test that the latest run comes first."""
        first = ExperimentRun.objects.create(task='periods')
        second = ExperimentRun.objects.create(task='twist')
        self.assertEqual(list(ExperimentRun.objects.all()), [second, first])


class ConfigurationTests(SimpleTestCase):
    """Test settings configuration."""

    def test_required_settings_exist(self):
        """Test that numerical defaults are configured."""
        for key in conf.DEFAULTS:
            self.assertIn(key, settings.NODAL_ATLAS)
        self.assertIn('nodal_atlas', settings.INSTALLED_APPS)

    def test_logging_configuration(self):
        """Test that logging is configured."""
        self.assertIn('nodal_atlas', settings.LOGGING['loggers'])
        self.assertEqual(settings.LOGGING['handlers']['console']['stream'], 'ext://sys.stderr')
        self.assertEqual(settings.LOG_LEVELS['warn'], 'WARNING')

    @override_settings(NODAL_ATLAS={'QUAD_TOL': 1e-6})
    def test_override_with_fallback(self):
        """Test that conf reads overrides and falls back to the defaults."""
        self.assertEqual(conf.get('QUAD_TOL'), 1e-6)
        self.assertEqual(conf.get('SCAN_SAMPLES'), 4096)


######################################################################

@unittest.skipUnless(SLOW, "set NODAL_ATLAS_SLOW_TESTS to run the multiplicity searches")
class MultiplicityTests(SimpleTestCase):
    """Full searches on two-hump instances, one per lambda regime."""

    ENDS = [('positive-y-axis', 'negative-y-axis'), ('positive-y-axis', 'positive-y-axis'),
            ('negative-y-axis', 'positive-y-axis'), ('negative-y-axis', 'negative-y-axis')]

    def count_per_end(self, problem, c_range, certificates=None, energy_cap=None):
        counts = []
        for start, end in self.ENDS:
            found = shoot.find_solutions(problem, BoundaryArc(start), BoundaryArc(end),
                                         n_samples=1024, c_range=c_range, energy_cap=energy_cap,
                                         certificates=certificates)
            for solution in found:
                self.assertTrue(solution.signature.consistent, solution.signature.notes)
                self.assertLessEqual(flow.hamiltonian_drift(problem, solution.trajectory), 1e-7)
            counts.append(len(found))
        return counts

    def test_lambda_zero_instance(self):
        """Test at least two solutions per end pair at lambda = 0."""
        problem = identity_problem(0.0, StepWeight.equal(1.0, 2.35, 8.0, 1))
        annuli = [certify.Annulus.build(problem, i, 1.0, 200.0) for i in (0, 1)]
        certs = [certify.check_twist(problem, a, None, 0, 1, 'lambda0-interior') for a in annuli]
        self.assertTrue(all(c.satisfied for c in certs))
        self.assertTrue(certify.check_linear_window(problem, 0, 'lambda0-gap', tuple(annuli)).satisfied)
        self.assertEqual(certify.lower_bound(certs, 0.0).total, 2)
        for count in self.count_per_end(problem, (1.0, 200.0)):
            self.assertGreaterEqual(count, 2)

    def test_positive_lambda_instance(self):
        """Test the second equal-hump choice end to end."""
        problem = equal_hump_problem(1.0, 130.0, 1.9, 1.55)
        annuli = [certify.Annulus.build(problem, i, 0.8, 20.0) for i in (0, 1)]
        certs = [certify.check_twist(problem, a, None, 1, 2) for a in annuli]
        self.assertTrue(all(c.satisfied for c in certs))
        self.assertTrue(certify.check_compat(problem, *annuli).ok)
        window = certify.check_linear_window(problem, 0, 'equal-hump-positive', tuple(annuli))
        self.assertEqual(certify.lower_bound(certs, 1.0, windows=[window]).total, 2)
        for count in self.count_per_end(problem, (0.8, 20.0)):
            self.assertGreaterEqual(count, 2)

    def test_negative_lambda_instance(self):
        """Test the saddle instance with tau = 1 and gap 6."""
        problem = saddle_problem()
        annuli = [certify.Annulus.build(problem, i, SADDLE_C1, SADDLE_C2) for i in (0, 1)]
        certs = [certify.check_twist(problem, a, None, 0, 2, 'positive-endpoint') for a in annuli]
        self.assertTrue(all(c.satisfied for c in certs))
        window = certify.check_linear_window(problem, 0, 'saddle-gap', tuple(annuli),
                                             theta1=1.5, theta2=14.0)
        self.assertTrue(window.satisfied)
        self.assertEqual(certify.lower_bound(certs, -1.0).total, 16)
        counts = self.count_per_end(problem, (SADDLE_C1, SADDLE_C2), energy_cap=10.0 * SADDLE_C2)
        for count in counts:
            self.assertGreaterEqual(count, 16)

    def test_three_positive_solutions(self):
        """Test that some gap length gives three positive solutions."""
        results = shoot.moore_nehari_scan([1.5, 2.0, 3.0, 4.0, 6.0], y_max=50.0)
        self.assertGreaterEqual(max(count for _, count, _ in results), 3)

    def test_random_period_oracle(self):
        """Test quadrature periods against first-return times on random instances."""
        rng = random.Random(12345)
        for _ in range(200):
            lam, p, mu = rng.uniform(-2.0, 2.0), rng.choice([0.5, 2.0, 3.0]), rng.uniform(0.5, 5.0)
            if lam < 0.0 and p < 1.0:
                c = rng.uniform(0.1, 0.9) * autonomous.critical_points(lam, mu, p).c_star
            else:
                c = rng.uniform(0.1, 10.0)
            problem = identity_problem(lam, StepWeight.constant(mu, 1.0), p=p)
            with self.subTest(lam=lam, p=p, mu=mu, c=c):
                self.assertAlmostEqual(quadrature.period(problem, 0, c),
                                       flow.first_return_time(problem, 0, c), delta=1e-5)

    def test_sublinear_branch_below_equilibrium(self):
        """Test M_+ < omega_+ for p < 1 and lambda < 0."""
        sweep = autonomous.branch_sweep(1, [-3.0, -2.0, -1.0], 1.0, 0.5, 1.0)
        omega = {lam: autonomous.critical_points(lam, 1.0, 0.5).omega_plus for lam in (-3.0, -2.0, -1.0)}
        for point in sweep.points:
            if not point.saturated:
                self.assertLess(point.M_plus, omega[point.lam])
