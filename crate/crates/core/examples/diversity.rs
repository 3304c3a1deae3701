//! Scaled diversity of a forecast matrix: each model's share of the total
//! squared pairwise distance, per variable.

use dtvw::diversity::scaled_diversity;
use dtvw::ModelMatrix;

fn main() -> dtvw::Result<()> {
    // Four models, two variables; the last model disagrees on the first variable.
    let preds = ModelMatrix::from_columns(&[vec![1.0, 1.1, 0.9, 2.5], vec![0.2, 0.4, 0.3, 0.3]])?;
    let div = scaled_diversity(&preds)?;
    println!("model  var1    var2");
    for k in 0..4 {
        println!("M{}     {:.3}   {:.3}", k + 1, div.get(k, 0), div.get(k, 1));
    }
    let shifted = ModelMatrix::from_columns(&[vec![11.0, 11.1, 10.9, 12.5], vec![2.0, 4.0, 3.0, 3.0]])?;
    println!("unchanged under shift and scale: {}", {
        let d = scaled_diversity(&shifted)?;
        (0..4).all(|k| (d.get(k, 0) - div.get(k, 0)).abs() < 1e-12 && (d.get(k, 1) - div.get(k, 1)).abs() < 1e-12)
    });
    Ok(())
}
