//! Probe for the tropical-limit bridge: growth of the Schottky–Igusa form
//! along tau = t i Q against the tropicalized form value.

use schottky::exact::QuadForm;
use schottky::schottky_trop::{tropical_form_value, AdmissibleChoice};
use schottky::theta_classical::{igusa_characteristics, schottky_igusa, RiemannMatrix};
use num_traits::ToPrimitive;

fn main() {
    let q = QuadForm::from_int_rows(&[
        vec![17, 5, 3, 5],
        vec![5, 19, 7, 11],
        vec![3, 7, 23, 16],
        vec![5, 11, 16, 29],
    ])
    .unwrap();
    let (m, n) = igusa_characteristics();
    let choice = AdmissibleChoice { m, n };
    let form = tropical_form_value(&q, &choice).unwrap();
    println!(
        "tropical pi: {:?}",
        form.pi.iter().map(|p| p.to_f64().unwrap()).collect::<Vec<_>>()
    );
    println!("tropical form value: {}", form.value.to_f64().unwrap());
    println!("argmax pairs: {:?}", form.argmax_pairs);
    let zero = [[0.0; 4]; 4];
    let mut prev: Option<f64> = None;
    for t in 1..=8 {
        let rm = RiemannMatrix::from_scaled_form(&zero, &q, t as f64).unwrap();
        let f = schottky_igusa(&rm, 1e-12);
        let log_f = f.value_log.log_mag;
        let slope = prev.map(|p| log_f - p);
        println!(
            "t = {t}: log|F| = {log_f:.6}, pi logs = [{:.4}, {:.4}, {:.4}], slope = {:?}",
            f.products[0].log_mag, f.products[1].log_mag, f.products[2].log_mag, slope
        );
        prev = Some(log_f);
    }
    let expected_slope = std::f64::consts::PI * form.value.to_f64().unwrap();
    println!("expected slope pi * value = {expected_slope:.6}");
}
