use std::io::Write;

use scaledgrad::{generate_least_squares, generate_logistic, write_problem, Problem};

use crate::common::write_atomic;
use crate::{CliError, GenArgs, KindArg};

pub fn generate(args: &GenArgs) -> Result<Problem, CliError> {
    let problem = match args.kind {
        KindArg::Ls => {
            generate_least_squares(args.rows, args.cols, args.seed, args.normalize, args.noise)?
        }
        KindArg::Logit => {
            generate_logistic(args.rows, args.cols, args.seed, args.normalize, args.noise)?
        }
    };
    Ok(problem)
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let problem = generate(args)?;
    let mut bytes = Vec::new();
    write_problem(&mut bytes, &problem)?;
    match &args.out {
        Some(path) => {
            write_atomic(path, &bytes)?;
            writeln!(
                out,
                "wrote {} problem {}x{} to {}",
                problem.kind().tag(),
                problem.sample_count(),
                problem.dimension(),
                path.display()
            )?;
        }
        None => out.write_all(&bytes)?,
    }
    Ok(())
}
