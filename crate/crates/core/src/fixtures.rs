//! Worked instances with known minima and exact certificate data.

use crate::certify::{
    gradient_problem, square_equalities, CertificateRecipe, ConeKind, Problem, SosExpression,
};
use crate::polyring::{parse_polynomial, RatPoly, Rational};

/// A problem together with its known minimum and, where available, the
/// data of an ε-certificate.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub description: &'static str,
    /// The formulation that is relaxed and certified.
    pub problem: Problem,
    pub f_min: Rational,
    /// Order at which the certificate lives and the relaxation is exact.
    pub order: u32,
    pub kind: ConeKind,
    pub recipe: Option<CertificateRecipe>,
    /// Known global minimizers.
    pub minimizers: Vec<Vec<f64>>,
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

struct Ring(usize);

impl Ring {
    fn p(&self, text: &str) -> RatPoly {
        parse_polynomial(text, self.0).expect("fixture polynomial parses")
    }

    fn sos(&self, squares: Vec<(Rational, RatPoly)>) -> SosExpression<Rational> {
        SosExpression::from_squares(self.0, squares)
    }
}

/// `min x1·x2` on `(x1²−1)² + (x2²−1)² = 0`, `x1 + x2 − 1 ≥ 0`; minimum 1 at (1,1).
pub fn finite_variety() -> Fixture {
    let r = Ring(2);
    let f = r.p("x1*x2");
    let h = r.p("x1^4 - 2*x1^2 + x2^4 - 2*x2^2 + 2");
    let g = r.p("x1 + x2 - 1");
    let u = r.p("x1^2 - 1");
    let v = r.p("x2^2 - 1");
    let d = r.p("x1 - x2");
    let p = (&(&v * &r.p("x1 - x2 + 1")) - &(&u * &r.p("x1 - x2 - 1"))).scale(&rat(1, 2));
    let q_base = &(&u * &r.p("x1 - x2 + 1")) + &(&v * &r.p("x1 - x2 - 1"));
    let psi = (&d.square() + &r.p("1")).scale(&rat(1, 2));
    let problem = Problem::new(f, vec![h], vec![g])
        .and_then(|p| p.with_square_roots(0, vec![u.clone(), v.clone()]))
        .expect("consistent");
    Fixture {
        name: "finite_variety",
        description: "finite real variety {(+-1,+-1)} cut by x1 + x2 >= 1",
        problem,
        f_min: rat(1, 1),
        order: 3,
        kind: ConeKind::QuadraticModule,
        recipe: Some(CertificateRecipe {
            f_min: rat(1, 1),
            p,
            ell: 1,
            c: rat(1, 4),
            ideal_witness: vec![(0, psi)],
            q: vec![(vec![], r.sos(vec![(rat(1, 4), q_base)]))],
            offset: vec![(vec![0], r.sos(vec![(rat(1, 2), d)]))],
            order: 3,
            kind: ConeKind::QuadraticModule,
        }),
        minimizers: vec![vec![1.0, 1.0]],
    }
}

/// `min x1` on `x1⁴ + x2⁴ = 0`; minimum 0 at the origin.
pub fn sum_of_powers() -> Fixture {
    let r = Ring(2);
    let f = r.p("x1");
    let h = r.p("x1^4 + x2^4");
    let problem = Problem::new(f.clone(), vec![h], vec![])
        .and_then(|p| p.with_square_roots(0, vec![r.p("x1^2"), r.p("x2^2")]))
        .expect("consistent");
    Fixture {
        name: "sum_of_powers",
        description: "linear objective on the single real point of x1^4 + x2^4 = 0",
        problem,
        f_min: rat(0, 1),
        order: 2,
        kind: ConeKind::QuadraticModule,
        recipe: Some(CertificateRecipe {
            f_min: rat(0, 1),
            p: f,
            ell: 2,
            c: rat(1, 4),
            ideal_witness: vec![(0, r.p("8"))],
            q: vec![(vec![], r.sos(vec![(rat(7, 1), r.p("x1^2")), (rat(8, 1), r.p("x2^2"))]))],
            offset: vec![],
            order: 2,
            kind: ConeKind::QuadraticModule,
        }),
        minimizers: vec![vec![0.0, 0.0]],
    }
}

/// `min x1·x2·x3 − 2·x3` on the twisted cubic, with its two equations
/// replaced by their sum of squares; minimum −1 at (1,1,1).
pub fn twisted_cubic() -> Fixture {
    let r = Ring(3);
    let f = r.p("x1*x2*x3 - 2*x3");
    let roots = vec![r.p("x1^2 - x2"), r.p("x1^3 - x3")];
    let hsq = square_equalities(&roots).expect("nonempty");
    let a = r.p("x3 - x1^3");
    let b = r.p("x2 - x1^2");
    let u = r.p("x1^3 - 2");
    let v = r.p("x1*x3");
    let p = &(&u * &a) + &(&v * &b);
    let q_base = &(&v * &a) - &(&u * &b);
    let psi = &v.square() + &u.square();
    let problem = Problem::new(f, vec![hsq], vec![])
        .and_then(|p| p.with_square_roots(0, roots))
        .expect("consistent");
    Fixture {
        name: "twisted_cubic",
        description: "x1*x2*x3 - 2*x3 on the twisted cubic, squared equations",
        problem,
        f_min: rat(-1, 1),
        order: 6,
        kind: ConeKind::QuadraticModule,
        recipe: Some(CertificateRecipe {
            f_min: rat(-1, 1),
            p,
            ell: 1,
            c: rat(1, 4),
            ideal_witness: vec![(0, psi)],
            q: vec![(vec![], r.sos(vec![(rat(1, 1), q_base)]))],
            offset: vec![(vec![], r.sos(vec![(rat(1, 1), r.p("x1^3 - 1"))]))],
            order: 6,
            kind: ConeKind::QuadraticModule,
        }),
        minimizers: vec![vec![1.0, 1.0, 1.0]],
    }
}

/// `min x1²x2²(x1²+x2²−1)` on `‖∇f‖² = 0`; minimum −1/27 at `(±1,±1)/√3`.
pub fn gradient_squared() -> Fixture {
    let r = Ring(2);
    let f = r.p("x1^4*x2^2 + x1^2*x2^4 - x1^2*x2^2");
    let problem = gradient_problem(&f, true);
    let a = r.p("x1^2 - 1/3");
    let b = r.p("x2^2 - 1/3");
    let m12 = r.p("x1*x2^3");
    let m21 = r.p("x1^3*x2");
    let m22 = r.p("x1^2*x2^2");
    let two_a_b = &a.scale(&rat(2, 1)) + &b;
    let a_two_b = &a + &b.scale(&rat(2, 1));
    let a_b = &a + &b;
    let one = rat(1, 1);
    let four = rat(4, 1);
    let q = r
        .sos(vec![
            (one.clone(), &(&m12 * &two_a_b) * &a),
            (one.clone(), &(&m12 * &two_a_b) * &b),
            (one.clone(), &(&m21 * &a_two_b) * &a),
            (one.clone(), &(&m21 * &a_two_b) * &b),
            (four.clone(), &(&m22 * &a_b) * &a),
            (four, &(&m22 * &a_b) * &b),
            (one.clone(), &m22 * &a.square()),
            (one, &m22 * &b.square()),
        ])
        .scaled(&rat(9, 2));
    let psi = (&r.p("x1^2 + x2^2") * &(&a.square() + &b.square())).scale(&rat(9, 8));
    let offset = r.sos(vec![(rat(3, 1), r.p("x1^2*x2^2 - 1/9"))]);
    let p = &(&f + &RatPoly::constant(2, rat(1, 27))) - &offset.expand();
    let s = 1.0 / 3f64.sqrt();
    Fixture {
        name: "gradient_squared",
        description: "x1^2*x2^2*(x1^2 + x2^2 - 1) on its squared gradient variety",
        problem,
        f_min: rat(-1, 27),
        order: 8,
        kind: ConeKind::QuadraticModule,
        recipe: Some(CertificateRecipe {
            f_min: rat(-1, 27),
            p,
            ell: 1,
            c: rat(1, 4),
            ideal_witness: vec![(0, psi)],
            q: vec![(vec![], q)],
            offset: vec![(vec![], offset)],
            order: 8,
            kind: ConeKind::QuadraticModule,
        }),
        minimizers: vec![vec![s, s], vec![s, -s], vec![-s, s], vec![-s, -s]],
    }
}

/// `min −x1² − x2²` on `x1³ ≥ 0, x2³ ≥ 0, −x1 − x2 − x1·x2 ≥ 0`, whose
/// feasible set is the origin; minimum 0.
pub fn finite_preordering() -> Fixture {
    let r = Ring(2);
    let f = r.p("-x1^2 - x2^2");
    let g = vec![r.p("x1^3"), r.p("x2^3"), r.p("-x1 - x2 - x1*x2")];
    let w = |n: i64, d: i64| rat(n, d);
    let sigma0 = r.sos(vec![
        (w(1, 1), r.p("x1^2 - x2^2").square()),
        (w(6, 1), r.p("x1^4 - x2^4")),
    ]);
    let sigma12 = r.sos(
        ["x1", "x2", "x1^2", "x2^2", "x1^3", "x2^3"]
            .iter()
            .map(|t| (w(32, 1), r.p(t)))
            .collect(),
    );
    let side = |x: &str, y: &str| {
        let s = |t: &str| t.replace('X', x).replace('Y', y);
        r.sos(vec![
            (w(32, 1), r.p(&s("X^3*Y + 1/8*X^3"))),
            (w(7, 2), r.p(&s("X^3"))),
            (w(4, 1), r.p(&s("X^3 + 2*X^2*Y"))),
            (w(16, 1), r.p(&s("X^2*Y + 1/2*X^2"))),
            (w(4, 1), r.p(&s("X^2 + X*Y"))),
            (w(28, 1), r.p(&s("X*Y"))),
            (w(32, 1), r.p(&s("Y^2"))),
            (w(32, 1), r.p(&s("Y^3"))),
            (w(32, 1), r.p(&s("Y^4"))),
        ])
    };
    let sigma3 = r.sos(vec![
        (w(8, 1), r.p("x1^4 + 1/2*x1^3")),
        (w(6, 1), r.p("x1^3")),
        (w(8, 1), r.p("x2^4 + 1/2*x2^3")),
        (w(6, 1), r.p("x2^3")),
        (w(32, 1), r.p("x1^2*x2")),
        (w(32, 1), r.p("x1*x2^2")),
        (w(32, 1), r.p("x1^3*x2")),
        (w(32, 1), r.p("x1*x2^3")),
        (w(32, 1), r.p("x1^4*x2")),
        (w(32, 1), r.p("x1*x2^4")),
    ]);
    let problem = Problem::new(f.clone(), vec![], g).expect("consistent");
    Fixture {
        name: "finite_preordering",
        description: "origin described by three inequalities; needs cross products",
        problem,
        f_min: rat(0, 1),
        order: 6,
        kind: ConeKind::Preordering,
        recipe: Some(CertificateRecipe {
            f_min: rat(0, 1),
            p: f,
            ell: 2,
            c: rat(1, 4),
            ideal_witness: vec![],
            q: vec![
                (vec![], sigma0),
                (vec![0], side("x1", "x2")),
                (vec![1], side("x2", "x1")),
                (vec![0, 1], sigma12),
                (vec![2], sigma3),
            ],
            offset: vec![],
            order: 6,
            kind: ConeKind::Preordering,
        }),
        minimizers: vec![vec![0.0, 0.0]],
    }
}

/// `min 1 − x²` on `(1 − x²)³ ≥ 0`; minimum 0 at `x = ±1`, but the
/// relaxation bounds stay strictly below 0 at every order.
pub fn cubed_interval() -> Fixture {
    let r = Ring(1);
    let base = r.p("1 - x1^2");
    let problem = Problem::new(base.clone(), vec![], vec![base.pow(3)]).expect("consistent");
    Fixture {
        name: "cubed_interval",
        description: "1 - x^2 over (1 - x^2)^3 >= 0, no finite convergence",
        problem,
        f_min: rat(0, 1),
        order: 3,
        kind: ConeKind::QuadraticModule,
        recipe: None,
        minimizers: vec![vec![1.0], vec![-1.0]],
    }
}

/// Every fixture, in a fixed order.
pub fn all() -> Vec<Fixture> {
    vec![
        finite_variety(),
        sum_of_powers(),
        twisted_cubic(),
        gradient_squared(),
        finite_preordering(),
        cubed_interval(),
    ]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}
