# Services package for simulation, verification and artifact I/O
