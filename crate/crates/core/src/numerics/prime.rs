//! Probabilistic primality testing and small-scale factorization of `p - 1`
//! (needed to confirm that `g` generates Z_p*).

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};

const SMALL_PRIMES: [u32; 13] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41];

/// Random Miller-Rabin rounds used above the deterministic range; each round
/// has error at most 1/4, so 40 rounds bound the error by 2^-80.
const RANDOM_ROUNDS: usize = 40;

/// Miller-Rabin. Deterministic for n < 3.3e24 (first 13 prime bases),
/// probabilistic with error below 2^-80 beyond that.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    let witness = |a: &BigUint| -> bool {
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            return false;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_1 {
                return false;
            }
        }
        true
    };

    if SMALL_PRIMES.iter().any(|&a| witness(&BigUint::from(a))) {
        return false;
    }
    // 3317044064679887385961981 is the bound for the 13-base deterministic set.
    let deterministic_bound: BigUint = "3317044064679887385961981".parse().expect("constant");
    if *n < deterministic_bound {
        return true;
    }
    let mut rng = rand::thread_rng();
    let upper = n - 2u32;
    (0..RANDOM_ROUNDS).all(|_| !witness(&rng.gen_biguint_range(&two, &upper)))
}

/// Distinct prime factors of `n`, or `None` when a cofactor resists
/// trial division and Pollard's rho within the work limit.
pub fn distinct_prime_factors(n: &BigUint) -> Option<Vec<BigUint>> {
    let mut factors = Vec::new();
    let mut rest = n.clone();
    if rest.is_zero() {
        return None;
    }

    let mut trial = 2u32;
    while trial < 10_000 {
        let t = BigUint::from(trial);
        if &t * &t > rest {
            break;
        }
        if (&rest % &t).is_zero() {
            factors.push(t.clone());
            while (&rest % &t).is_zero() {
                rest /= &t;
            }
        }
        trial += if trial == 2 { 1 } else { 2 };
    }

    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if is_probable_prime(&m) {
            if !factors.contains(&m) {
                factors.push(m);
            }
            continue;
        }
        let d = pollard_rho(&m)?;
        let mut cofactor = m / &d;
        stack.push(d.clone());
        // strip repeated powers so the stack stays small
        while (&cofactor % &d).is_zero() {
            cofactor /= &d;
        }
        stack.push(cofactor);
    }
    factors.sort();
    factors.dedup();
    Some(factors)
}

/// Brent's variant of Pollard's rho; returns a non-trivial divisor.
fn pollard_rho(n: &BigUint) -> Option<BigUint> {
    if n.is_even() {
        return Some(BigUint::from(2u32));
    }
    const MAX_STEPS: u64 = 1 << 22;
    for c in 1u32..20 {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut x = BigUint::from(2u32);
        let mut y = x.clone();
        let mut d = BigUint::one();
        let mut steps = 0u64;
        while d.is_one() && steps < MAX_STEPS {
            x = f(&x);
            y = f(&f(&y));
            let diff = if x > y { &x - &y } else { &y - &x };
            d = diff.gcd(n);
            steps += 1;
        }
        if !d.is_one() && &d != n {
            return Some(d);
        }
    }
    None
}
