class SpecWindowError(Exception):
    pass


class AssemblyError(SpecWindowError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(SpecWindowError):
    pass


class SimulationError(SpecWindowError):
    pass


class FuelExhausted(SimulationError):
    pass


class MemoryFault(SimulationError):
    def __init__(self, addr, pc=None):
        self.addr = addr
        self.pc = pc
        where = "" if pc is None else f" at pc {pc}"
        super().__init__(f"memory access outside image: 0x{addr:x}{where}")
