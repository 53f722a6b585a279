#![no_main]
use compc::gf::{FMatrix, Field};
use compc::rscode::{decode, max_errors};
use libfuzzer_sys::fuzz_target;

// Layout: [prime selector, degree, budget, n, received values...]
fuzz_target!(|data: &[u8]| {
    if data.len() < 4 {
        return;
    }
    let p = [5u64, 11, 13, 257][data[0] as usize % 4];
    let field = Field::new(p).expect("prime");
    let degree = data[1] as usize % 6;
    let n = (data[3] as usize % 12).min(data.len() - 4);
    let alphas: Vec<u64> = (1..=n as u64).filter(|&a| a < p).collect();
    let received: Vec<FMatrix> =
        data[4..4 + alphas.len()].iter().map(|&v| FMatrix::scalar(field, v as u64 % p)).collect();
    let budget = data[2] as usize % 4;
    if let Ok(d) = decode(field, degree, &alphas, &received, budget) {
        assert!(d.errors.len() <= budget.max(max_errors(alphas.len(), degree)));
        assert!(d.poly.degree().unwrap_or(0) <= degree);
        for (i, (&a, r)) in alphas.iter().zip(&received).enumerate() {
            assert_eq!(d.errors.contains(&i), d.poly.eval(a) != *r);
        }
    }
});
